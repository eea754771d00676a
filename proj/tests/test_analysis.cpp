// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>

#include "azo/analysis.hpp"
#include "azo/feature_learning.hpp"

using namespace azo;

namespace {

std::shared_ptr<QuadraticObjective> identity_quadratic(const BlockLayout& layout) {
  const auto n = static_cast<Eigen::Index>(layout.total_dim());
  return std::make_shared<QuadraticObjective>(layout, Eigen::MatrixXd::Identity(n, n),
                                              Eigen::VectorXd::Zero(n), 0.0);
}

}  // namespace

TEST_CASE("exact smoothed value of a quadratic") {
  const BlockLayout layout({2});
  const auto q = identity_quadratic(layout);
  const BlockVector x(layout);
  CHECK(smoothed_value_exact(*q, x, 0, 0.1) == doctest::Approx(0.01).epsilon(1e-12));

  // mu -> 0: the smoothing offset vanishes quadratically
  CHECK(std::abs(smoothed_value_exact(*q, x, 0, 1e-8) - q->value(x)) <= 1e-15);
}

TEST_CASE("monte-carlo smoothed value agrees with the closed form") {
  const BlockLayout layout({2});
  const auto q = identity_quadratic(layout);
  const BlockVector x(layout, {0.5, -0.5});
  RngStream rng(3, streams::kVerification);
  SmoothingOracle oracle(*q, 0.1, 10000);
  const auto estimate = oracle.value(x, 0, rng);
  const double exact = smoothed_value_exact(*q, x, 0, 0.1);
  CHECK(std::abs(estimate.mean - exact) <= 3.0 * estimate.std_error);
}

TEST_CASE("linear functions are unchanged by smoothing") {
  const BlockLayout layout({3});
  auto linear = std::make_shared<FunctionObjective>(layout, [](const BlockVector& v) {
    return 2.0 * v[0] - v[1] + 0.5 * v[2];
  });
  const BlockVector x(layout, {1.0, 2.0, 3.0});
  RngStream rng(4, streams::kVerification);
  SmoothingOracle oracle(*linear, 0.2, 20000);
  const auto estimate = oracle.value(x, 0, rng);
  CHECK(std::abs(estimate.mean - linear->value(x)) <= 3.0 * estimate.std_error);
}

TEST_CASE("exact smoothed block gradient is the projected gradient") {
  const BlockLayout layout({1, 1});
  const auto q = identity_quadratic(layout);
  const BlockVector x(layout, {1.0, 2.0});
  const auto projected = smoothed_gradient_exact(*q, x, 1);
  CHECK(projected[0] == 0.0);
  CHECK(projected[1] == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("monte-carlo block gradient of a constant is zero within noise") {
  const BlockLayout layout({2, 2});
  auto constant = std::make_shared<FunctionObjective>(layout, [](const BlockVector&) {
    return 5.0;
  });
  RngStream rng(5, streams::kVerification);
  SmoothingOracle oracle(*constant, 0.1, 5000);
  const auto estimate = oracle.gradient_block(BlockVector(layout), 0, rng);
  for (std::size_t j = 0; j < estimate.mean.size(); ++j) {
    CHECK(std::abs(estimate.mean[j]) <= 3.0 * estimate.std_error[j] + 1e-15);
  }
}

TEST_CASE("monte-carlo errors shrink with the sample count") {
  const BlockLayout layout({2, 3});
  RngStream setup(6, 1);
  const auto q = std::make_shared<QuadraticObjective>(random_quadratic(layout, setup));
  const BlockVector x(layout, {0.1, 0.2, 0.3, 0.4, 0.5});
  RngStream rng(7, streams::kVerification);
  double previous_se = std::numeric_limits<double>::infinity();
  for (const std::size_t samples : {1000u, 10000u, 100000u}) {
    SmoothingOracle oracle(*q, 0.1, samples);
    const auto value = oracle.value(x, 1, rng);
    CHECK(std::abs(value.mean - smoothed_value_exact(*q, x, 1, 0.1)) <=
          3.0 * value.std_error);
    const auto grad = oracle.gradient_block(x, 1, rng);
    const auto exact = smoothed_gradient_exact(*q, x, 1);
    const auto block = exact.block(1);
    for (std::size_t j = 0; j < grad.mean.size(); ++j) {
      CHECK(std::abs(grad.mean[j] - block[j]) <= 3.0 * grad.std_error[j]);
    }
    CHECK(value.std_error < previous_se);
    previous_se = value.std_error;
  }
}

TEST_CASE("smoothing error bounds hold exactly for quadratics") {
  const BlockLayout layout({2, 3});
  RngStream rng(8, streams::kVerification);
  const auto q = std::make_shared<QuadraticObjective>(random_quadratic(layout, rng));
  std::vector<BlockVector> points;
  for (int p = 0; p < 20; ++p) {
    points.emplace_back(layout, sample_standard_gaussian(layout.total_dim(), rng));
  }
  const auto report =
      check_smoothing_error_bounds(*q, points, 0.1, q->spectral_norm(), 1000, rng);
  CHECK(report.all_ok());
  CHECK(report.cases.size() == 40);  // 20 points x 2 blocks
  CHECK(report.max_value_slack <= 0.0);
}

TEST_CASE("identity quadratic meets the value bound with equality") {
  const BlockLayout layout({2, 3});
  const auto q = identity_quadratic(layout);
  RngStream rng(9, streams::kVerification);
  std::vector<BlockVector> points;
  points.emplace_back(layout, sample_standard_gaussian(layout.total_dim(), rng));
  const auto report = check_smoothing_error_bounds(*q, points, 0.1, 1.0, 1000, rng);
  CHECK(report.all_ok());
  CHECK(report.max_value_slack == doctest::Approx(0.0).epsilon(1e-12));

  // Negative control: halving the smoothness constant must break the bound.
  const auto corrupted = check_smoothing_error_bounds(*q, points, 0.1, 0.5, 1000, rng);
  CHECK(corrupted.violations > 0);
}

TEST_CASE("smoothing error bounds hold for the benchmark under monte carlo") {
  RngStream dataset_rng(10, streams::kDataset);
  const auto fn = make_benchmark(3, 10, 5, dataset_rng);
  RngStream rng(11, streams::kVerification);
  std::vector<BlockVector> points;
  for (int p = 0; p < 5; ++p) {
    points.emplace_back(fn.layout(), sample_standard_gaussian(fn.layout().total_dim(), rng));
  }
  const auto report =
      check_smoothing_error_bounds(fn, points, 0.1, fn.smoothness_bound(), 20000, rng);
  CHECK(report.all_ok());
}

TEST_CASE("estimator mean bridges to the smoothing oracle on the benchmark") {
  RngStream dataset_rng(12, streams::kDataset);
  auto fn = std::make_shared<FeatureLearningObjective>(make_benchmark(3, 10, 4, dataset_rng));
  ObjectiveHandle obj(fn);
  RngStream rng(13, streams::kVerification);
  const BlockVector x(fn->layout(), sample_standard_gaussian(fn->layout().total_dim(), rng));
  const double mu = 0.1;
  const int agent = 2;
  constexpr std::size_t kSamples = 100000;

  SmoothingOracle oracle(*fn, mu, kSamples);
  const auto target = oracle.gradient_block(x, agent, rng);

  const auto dim = static_cast<std::size_t>(fn->layout().block_dim(agent));
  std::vector<double> mean(dim, 0.0);
  std::vector<double> m2(dim, 0.0);
  for (std::size_t s = 0; s < kSamples; ++s) {
    AgentState state;
    state.agent = agent;
    state.smoothing = mu;
    residual_async(obj, x, state, 0, rng);
    const auto estimate = residual_async(obj, x, state, 1, rng);
    const auto block = estimate->direction().block_values();
    for (std::size_t j = 0; j < dim; ++j) {
      const double g = estimate->scale() * block[j];
      const double delta = g - mean[j];
      mean[j] += delta / static_cast<double>(s + 1);
      m2[j] += delta * (g - mean[j]);
    }
  }
  for (std::size_t j = 0; j < dim; ++j) {
    const double se_est =
        std::sqrt(m2[j] / static_cast<double>(kSamples - 1) / static_cast<double>(kSamples));
    const double combined =
        std::sqrt(se_est * se_est + target.std_error[j] * target.std_error[j]);
    CHECK(std::abs(mean[j] - target.mean[j]) <= 3.0 * combined);
  }
}

TEST_CASE("recursion bound worked examples") {
  SUBCASE("per-step bound") {
    const SequenceBoundParams a(0.1, 0.2, 0.0, 1.0);
    CHECK(recursion_bound(a, 1) == doctest::Approx(0.1).epsilon(1e-12));
    const SequenceBoundParams b(0.3, 0.3, 1.0, 2.0);
    CHECK(recursion_bound(b, 3) == doctest::Approx(1.696).epsilon(1e-12));
    CHECK_THROWS_AS(recursion_bound(a, 0), DomainError);
  }

  SUBCASE("sum bound") {
    const SequenceBoundParams no_offset(0.1, 0.2, 0.0, 1.0);
    CHECK(recursion_sum_bound(no_offset, 5) ==
          doctest::Approx((1.0 - 0.2) / (1.0 - 0.3)).epsilon(1e-12));
    const SequenceBoundParams full(0.1, 0.2, 1.0, 1.0);
    const double expected = 3.0 * (0.8 / 0.7) - 0.1 / 0.49;
    CHECK(recursion_sum_bound(full, 3) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(recursion_sum_bound(full, 3) == doctest::Approx(3.2245).epsilon(1e-4));
  }

  SUBCASE("extremal sequence") {
    const SequenceBoundParams params(0.1, 0.2, 0.0, 1.0);
    const auto v = extremal_recursion_sequence(params, 3);
    REQUIRE(v.size() == 3);
    CHECK(v[0] == 1.0);
    CHECK(v[1] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(v[2] == doctest::Approx(0.03).epsilon(1e-12));

    const SequenceBoundParams offset_only(0.25, 0.5, 2.0, 0.0);
    const auto w = extremal_recursion_sequence(offset_only, 3);
    CHECK(w[0] == 0.0);
    CHECK(w[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(w[2] == doctest::Approx(0.25 * 2.0 + 2.0).epsilon(1e-12));

    const SequenceBoundParams zero_data(0.25, 0.5, 0.0, 0.0);
    for (double vk : extremal_recursion_sequence(zero_data, 10)) {
      CHECK(vk == 0.0);
    }
  }

  SUBCASE("domain validation") {
    CHECK_THROWS_AS(SequenceBoundParams(0.5, 0.5, 0.0, 0.0), DomainError);
    CHECK_THROWS_AS(SequenceBoundParams(0.0, 0.5, 0.0, 0.0), DomainError);
    CHECK_THROWS_AS(SequenceBoundParams(0.1, 1.0, 0.0, 0.0), DomainError);
    CHECK_THROWS_AS(SequenceBoundParams(0.1, 0.2, -1.0, 0.0), DomainError);
  }
}

TEST_CASE("closed-form bounds dominate the extremal recursion") {
  RngStream rng(14, streams::kVerification);
  constexpr double kRelTol = 1e-9;
  for (int draw = 0; draw < 1000; ++draw) {
    const double total = 0.01 + 0.98 * rng.uniform01();
    const double split = 0.01 + 0.98 * rng.uniform01();
    const double gamma = std::max(total * (1.0 - split), 1e-8);
    const double beta = std::min(std::max(total - gamma, 1e-8), 0.999999);
    const SequenceBoundParams params(gamma, beta, 5.0 * rng.uniform01(), 5.0 * rng.uniform01());
    const auto horizon = static_cast<std::uint64_t>(2 + rng.uniform01() * 198);
    const auto sequence = extremal_recursion_sequence(params, horizon);
    double sum = sequence[0];
    for (std::uint64_t k = 1; k < horizon; ++k) {
      const double vk = sequence[static_cast<std::size_t>(k)];
      sum += vk;
      REQUIRE(vk <= recursion_bound(params, k) * (1.0 + kRelTol) + 1e-300);
    }
    REQUIRE(sum <= recursion_sum_exact(params, horizon) * (1.0 + kRelTol) + 1e-300);
  }
}

TEST_CASE("stated and exact sum forms differ by the dropped tail term") {
  RngStream rng(16, streams::kVerification);
  for (int draw = 0; draw < 200; ++draw) {
    const double gamma = 0.05 + 0.4 * rng.uniform01();
    const double beta = 0.05 + (0.9 - gamma) * rng.uniform01();
    const double additive = 5.0 * rng.uniform01();
    const double v0 = 5.0 * rng.uniform01();
    const SequenceBoundParams params(gamma, beta, additive, v0);
    const auto horizon = static_cast<std::uint64_t>(2 + rng.uniform01() * 50);
    const double rate = gamma + beta;
    const double tail = std::pow(rate, static_cast<double>(horizon - 1));
    const double correction =
        gamma * tail / (1.0 - rate) * (v0 - additive / (1.0 - rate));
    const double stated = recursion_sum_bound(params, horizon);
    const double exact = recursion_sum_exact(params, horizon);
    CHECK(stated - exact == doctest::Approx(correction).epsilon(1e-9));
  }
  // Consequence: for small V0 the stated form undercuts the attainable sum.
  const SequenceBoundParams params(0.1, 0.2, 1.0, 1.0);
  const auto sequence = extremal_recursion_sequence(params, 3);
  const double attained = sequence[0] + sequence[1] + sequence[2];
  CHECK(attained == doctest::Approx(3.23).epsilon(1e-12));
  CHECK(attained > recursion_sum_bound(params, 3));
  CHECK(attained <= recursion_sum_exact(params, 3) * (1.0 + 1e-12));
}

TEST_CASE("moment recursion parameter instantiation") {
  // Admissible under a tuned schedule: gamma stays near p_min/2.
  const auto params = estimator_moment_recursion_params(1.0, 4, 1e-4, 0.5, 0.25, 1000, 0.0);
  CHECK(params.beta == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(params.gamma ==
        doctest::Approx(2.0 * 4.0 * 1e-8 * 999.0 / 0.25).epsilon(1e-12));
  CHECK(params.additive_const == doctest::Approx(4.0 * (64.0 + 16.0)).epsilon(1e-12));
  // Fixed (alpha, mu) at a long horizon violates gamma + beta < 1.
  CHECK_THROWS_AS(estimator_moment_recursion_params(1.0, 4, 0.5, 0.1, 0.25, 100000, 0.0),
                  DomainError);
}

TEST_CASE("second moment tracker") {
  SecondMomentTracker tracker(2);
  CHECK(tracker.mean() == 0.0);
  const BlockLayout layout({1, 1});
  tracker.add(GradientEstimate(PerturbationDirection(layout, 0, {1.0}), 1.0));   // norm 1
  tracker.add(GradientEstimate(PerturbationDirection(layout, 1, {1.0}), 3.0));   // norm 3
  CHECK(tracker.mean() == doctest::Approx(5.0).epsilon(1e-12));  // (1 + 9) / 2
  CHECK(tracker.mean(0) == doctest::Approx(1.0));
  CHECK(tracker.mean(1) == doctest::Approx(9.0));
  CHECK(tracker.count() == 2);

  tracker.begin_window();
  tracker.add(0, 7.0);
  CHECK(tracker.num_windows() == 2);
  CHECK(tracker.window_mean(1) == doctest::Approx(7.0));
  CHECK(tracker.mean() == doctest::Approx((1.0 + 9.0 + 7.0) / 3.0));
}

TEST_CASE("sampled constants approximate quadratic truth") {
  const BlockLayout layout({2, 2});
  RngStream rng(15, streams::kVerification);
  const auto q = std::make_shared<QuadraticObjective>(random_quadratic(layout, rng));
  const auto constants = estimate_constants(*q, 128, 2.0, rng);
  // The secant quotient of a quadratic equals a Rayleigh quotient of A, so
  // the estimate must sit below the spectral norm but well above zero.
  CHECK(constants.l1 <= q->spectral_norm() * (1.0 + 1e-9));
  CHECK(constants.l1 >= 0.3 * q->spectral_norm());
  CHECK(constants.l0 > 0.0);
}
