// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>
#include <optional>

#include "azo/feature_learning.hpp"
#include "azo/scheduler.hpp"

using namespace azo;

namespace {

std::shared_ptr<QuadraticObjective> half_norm_squared(const BlockLayout& layout) {
  const auto n = static_cast<Eigen::Index>(layout.total_dim());
  return std::make_shared<QuadraticObjective>(layout, Eigen::MatrixXd::Identity(n, n),
                                              Eigen::VectorXd::Zero(n), 0.0);
}

}  // namespace

TEST_CASE("activation model validation") {
  CHECK_THROWS_AS(ActivationModel::categorical({0.5, 0.4}), ConfigError);
  CHECK_THROWS_AS(ActivationModel::categorical({1.5, -0.5}), ConfigError);
  CHECK_THROWS_AS(ActivationModel::categorical({}), ConfigError);
  CHECK_THROWS_AS(ActivationModel::exponential_clocks({1.0, 0.0}), ConfigError);
  const auto model = ActivationModel::exponential_clocks({3.0, 1.0});
  CHECK(model.probabilities()[0] == doctest::Approx(0.75));
  CHECK(model.min_probability() == doctest::Approx(0.25));
  CHECK(ActivationModel::uniform(4).min_probability() == doctest::Approx(0.25));
}

TEST_CASE("degenerate categorical model always picks agent zero") {
  const auto model = ActivationModel::categorical({1.0});
  RngStream rng(1, streams::kScheduler);
  ActivationSampler sampler(model, rng);
  for (int s = 0; s < 100; ++s) {
    const auto activation = sampler.next(rng);
    CHECK(activation.agent == 0);
    CHECK_FALSE(activation.event_time.has_value());
  }
}

TEST_CASE("competing exponential clocks activate at the rate ratio") {
  RngStream rng(7, streams::kScheduler);
  constexpr int kEvents = 1000000;

  SUBCASE("equal rates") {
    const auto model = ActivationModel::exponential_clocks({1.0, 1.0});
    ActivationSampler sampler(model, rng);
    int zero_count = 0;
    double last_time = 0.0;
    for (int s = 0; s < kEvents; ++s) {
      const auto activation = sampler.next(rng);
      REQUIRE(activation.event_time.has_value());
      CHECK(*activation.event_time > last_time);
      last_time = *activation.event_time;
      if (activation.agent == 0) zero_count += 1;
    }
    CHECK(std::abs(static_cast<double>(zero_count) / kEvents - 0.5) <= 0.0015);
  }

  SUBCASE("rates 3:1") {
    const auto model = ActivationModel::exponential_clocks({3.0, 1.0});
    ActivationSampler sampler(model, rng);
    int zero_count = 0;
    for (int s = 0; s < kEvents; ++s) {
      if (sampler.next(rng).agent == 0) zero_count += 1;
    }
    CHECK(std::abs(static_cast<double>(zero_count) / kEvents - 0.75) <= 0.0013);
  }
}

TEST_CASE("categorical activation frequencies stay within binomial bounds") {
  const std::vector<double> probs = {0.5, 0.3, 0.2};
  const auto model = ActivationModel::categorical(probs);
  RngStream rng(11, streams::kScheduler);
  ActivationSampler sampler(model, rng);
  constexpr int kEvents = 1000000;
  int counts[3] = {0, 0, 0};
  for (int s = 0; s < kEvents; ++s) {
    counts[sampler.next(rng).agent] += 1;
  }
  for (int i = 0; i < 3; ++i) {
    const double se = std::sqrt(probs[i] * (1.0 - probs[i]) / kEvents);
    CHECK(std::abs(static_cast<double>(counts[i]) / kEvents - probs[i]) <= 3.0 * se);
  }
}

TEST_CASE("tuned schedule formulas") {
  SUBCASE("unit plug-in") {
    const auto pair = tuned_schedule(1.0, 1, 1.0, 1);
    CHECK(pair.alpha == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pair.mu == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("composite plug-in") {
    const auto pair = tuned_schedule(2.0, 4, 0.25, 1000000);
    CHECK(pair.alpha == doctest::Approx(5e-5).epsilon(1e-12));
    CHECK(pair.mu == doctest::Approx(0.8).epsilon(1e-12));
  }
  SUBCASE("horizon scaling exponents") {
    const auto base = tuned_schedule(1.0, 3, 0.5, 1000);
    const auto scaled = tuned_schedule(1.0, 3, 0.5, 8000);
    CHECK(base.alpha / scaled.alpha == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(base.mu / scaled.mu == doctest::Approx(std::pow(8.0, 1.0 / 6.0)).epsilon(1e-12));
  }
  SUBCASE("alternate variant moves the dimension factor") {
    const auto a = tuned_schedule(1.0, 4, 0.25, 100, TunedVariant::dimension_in_mu);
    const auto b = tuned_schedule(1.0, 4, 0.25, 100, TunedVariant::dimension_in_alpha);
    CHECK(a.alpha == doctest::Approx(2.0 * b.alpha).epsilon(1e-12));
    CHECK(a.mu == doctest::Approx(2.0 * b.mu).epsilon(1e-12));
  }
  SUBCASE("rejects non-positive inputs") {
    CHECK_THROWS_AS(tuned_schedule(0.0, 1, 0.5, 10), ConfigError);
    CHECK_THROWS_AS(tuned_schedule(1.0, 0, 0.5, 10), ConfigError);
    CHECK_THROWS_AS(tuned_schedule(1.0, 1, 0.0, 10), ConfigError);
    CHECK_THROWS_AS(tuned_schedule(1.0, 1, 0.5, 0), ConfigError);
  }
}

TEST_CASE("bootstrap-only budget leaves the decision unchanged") {
  const BlockLayout layout({2});
  ObjectiveHandle obj(half_norm_squared(layout));
  const BlockVector x0(layout, {1.0, -1.0});
  RunConfig cfg;
  cfg.budget = Budget::queries(1);
  cfg.schedule = ManualSchedule::uniform(0.5, 0.1);
  cfg.seed = 5;
  const auto result = run_algorithm(obj, x0, ActivationModel::categorical({1.0}), cfg);
  CHECK(result.clock.iteration == 1);
  CHECK(result.clock.queries == 1);
  CHECK(result.clock.bootstraps == 1);
  CHECK(result.x[0] == 1.0);
  CHECK(result.x[1] == -1.0);
  CHECK(obj.query_count() == 1);
}

TEST_CASE("blocks of agents activated at most once stay untouched") {
  const BlockLayout layout({1, 1, 1});
  ObjectiveHandle obj(half_norm_squared(layout));
  const BlockVector x0(layout, {1.0, 2.0, 3.0});
  RunConfig cfg;
  cfg.budget = Budget::queries(3);
  cfg.schedule = ManualSchedule::uniform(0.5, 0.1);
  cfg.seed = 42;
  cfg.record_activations = true;
  const auto result = run_algorithm(obj, x0, ActivationModel::uniform(3), cfg);
  int counts[3] = {0, 0, 0};
  for (int agent : result.clock.activations) counts[agent] += 1;
  for (int i = 0; i < 3; ++i) {
    if (counts[i] <= 1) {
      CHECK(result.x[static_cast<std::size_t>(i)] == x0[static_cast<std::size_t>(i)]);
    }
  }
}

TEST_CASE("scalar quadratic contracts under stable parameters") {
  // Independent straight-line oracle simulating the same dynamics, used to
  // pin the parameter regime before asserting on the library path.
  const auto oracle_final = [](double mu, double alpha, int horizon, std::uint64_t seed) {
    RngStream rng(seed, streams::kAgentBase);
    double x = 1.0;
    std::optional<double> prev;
    for (int k = 0; k < horizon; ++k) {
      const double u = rng.normal();
      const double value = 0.5 * (x + mu * u) * (x + mu * u);
      if (!prev) {
        prev = value;
        continue;
      }
      const double g = (value - *prev) / mu * u;
      prev = value;
      if (std::abs(g) > kEstimateNormGuard) return std::numeric_limits<double>::infinity();
      x -= alpha * g;
    }
    return std::abs(x);
  };

  const BlockLayout layout({1});
  const auto run_driver = [&](double mu, double alpha, std::uint64_t seed) {
    ObjectiveHandle obj(half_norm_squared(layout));
    RunConfig cfg;
    cfg.budget = Budget::iterations(2000);
    cfg.schedule = ManualSchedule::uniform(alpha, mu);
    cfg.seed = seed;
    return run_algorithm(obj, BlockVector(layout, {1.0}), ActivationModel::categorical({1.0}),
                         cfg);
  };

  SUBCASE("oracle and driver agree that mu=0.1, alpha=0.05 contracts") {
    int oracle_hits = 0;
    int driver_hits = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      if (oracle_final(0.1, 0.05, 2000, seed) < 0.2) oracle_hits += 1;
      const auto result = run_driver(0.1, 0.05, seed);
      CHECK_FALSE(result.diverged);
      if (std::abs(result.x[0]) < 0.2) driver_hits += 1;
    }
    CHECK(oracle_hits >= 9);
    CHECK(driver_hits >= 9);
  }

  SUBCASE("large step-to-smoothing ratios trip the divergence guard") {
    // alpha/mu = 100 puts the residual feedback loop far outside its
    // stability envelope; the guard must catch it instead of cascading NaNs.
    int diverged = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto result = run_driver(1e-3, 0.1, seed);
      if (result.diverged) diverged += 1;
    }
    CHECK(diverged >= 9);
  }
}

TEST_CASE("query budgets are exact") {
  const BlockLayout layout({1, 1});

  SUBCASE("residual: one query per activation") {
    ObjectiveHandle obj(half_norm_squared(layout));
    RunConfig cfg;
    cfg.budget = Budget::queries(501);
    cfg.schedule = ManualSchedule::uniform(0.01, 0.1);
    cfg.seed = 3;
    const auto result = run_algorithm(obj, BlockVector(layout, {0.3, 0.4}),
                                      ActivationModel::uniform(2), cfg);
    CHECK(result.clock.queries == 501);
    CHECK(result.clock.iteration == 501);
    CHECK(obj.query_count() == 501);
  }

  SUBCASE("two-point: two queries per activation") {
    ObjectiveHandle obj(half_norm_squared(layout));
    RunConfig cfg;
    cfg.budget = Budget::queries(500);
    cfg.estimator = EstimatorKind::two_point_async;
    cfg.schedule = ManualSchedule::uniform(0.01, 0.1);
    cfg.seed = 3;
    const auto result = run_algorithm(obj, BlockVector(layout, {0.3, 0.4}),
                                      ActivationModel::uniform(2), cfg);
    CHECK(result.clock.queries == 500);
    CHECK(result.clock.iteration == 250);
    CHECK(result.clock.bootstraps == 0);
  }

  SUBCASE("iteration budget with the two-point estimator") {
    ObjectiveHandle obj(half_norm_squared(layout));
    RunConfig cfg;
    cfg.budget = Budget::iterations(100);
    cfg.estimator = EstimatorKind::two_point_async;
    cfg.schedule = ManualSchedule::uniform(0.01, 0.1);
    cfg.seed = 4;
    const auto result = run_algorithm(obj, BlockVector(layout, {0.3, 0.4}),
                                      ActivationModel::uniform(2), cfg);
    CHECK(result.clock.iteration == 100);
    CHECK(result.clock.queries == 200);
  }

  SUBCASE("residual queries split into bootstraps plus updates") {
    ObjectiveHandle obj(half_norm_squared(layout));
    RunConfig cfg;
    cfg.budget = Budget::queries(200);
    cfg.schedule = ManualSchedule::uniform(0.01, 0.1);
    cfg.seed = 9;
    const auto result = run_algorithm(obj, BlockVector(layout, {0.3, 0.4}),
                                      ActivationModel::uniform(2), cfg);
    CHECK(result.clock.bootstraps == 2);  // one per agent
    CHECK(result.clock.queries == result.clock.iteration);
  }
}

TEST_CASE("trace grid has floor(budget / record_every) rows") {
  RngStream dataset_rng(1, streams::kDataset);
  auto fn = std::make_shared<FeatureLearningObjective>(make_benchmark(5, 20, 10, dataset_rng));
  ObjectiveHandle obj(fn, fn->metadata());
  RngStream init_rng(1, streams::kInitialPoint);
  BlockVector x0(fn->layout(), sample_standard_gaussian(fn->layout().total_dim(), init_rng));
  RunConfig cfg;
  cfg.budget = Budget::queries(10000);
  cfg.schedule = ManualSchedule::uniform(0.5, 0.1);
  cfg.seed = 77;
  cfg.record_every = 128;
  std::vector<TraceRow> rows;
  const Recorder recorder = [&rows](const TraceRow& row) { rows.push_back(row); };
  const auto result = run_algorithm(obj, x0, ActivationModel::uniform(5), cfg, recorder);
  CHECK(result.clock.queries == 10000);
  CHECK(obj.query_count() == 10000);
  CHECK(rows.size() == 10000 / 128);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].queries == (i + 1) * 128);
    CHECK(std::isfinite(rows[i].loss));
    CHECK_FALSE(rows[i].grad_norm_sq.has_value());
  }
}

TEST_CASE("at most one block changes per activation") {
  const BlockLayout layout({2, 3, 1});
  ObjectiveHandle obj(half_norm_squared(layout));
  RngStream init_rng(2, streams::kInitialPoint);
  BlockVector x0(layout, sample_standard_gaussian(layout.total_dim(), init_rng));
  RunConfig cfg;
  cfg.budget = Budget::queries(300);
  cfg.schedule = ManualSchedule::uniform(0.05, 0.1);
  cfg.seed = 13;
  BlockVector previous = x0;
  int violations = 0;
  const StepObserver observer = [&](std::uint64_t, int agent, const BlockVector& x) {
    int changed_blocks = 0;
    for (int b = 0; b < layout.num_blocks(); ++b) {
      const auto before = previous.block(b);
      const auto after = x.block(b);
      bool changed = false;
      for (std::size_t j = 0; j < before.size(); ++j) {
        if (before[j] != after[j]) changed = true;
      }
      if (changed) {
        changed_blocks += 1;
        if (b != agent) violations += 1;
      }
    }
    if (changed_blocks > 1) violations += 1;
    previous = x;
  };
  run_algorithm(obj, x0, ActivationModel::uniform(3), cfg, {}, observer);
  CHECK(violations == 0);
}

TEST_CASE("replay determinism: identical seeds give identical traces") {
  const BlockLayout layout({2, 2});
  const auto run_once = [&]() {
    ObjectiveHandle obj(half_norm_squared(layout));
    RunConfig cfg;
    cfg.budget = Budget::queries(400);
    cfg.schedule = ManualSchedule::uniform(0.05, 0.1);
    cfg.seed = 1234;
    cfg.record_every = 16;
    cfg.record_grad_norm = true;
    std::vector<TraceRow> rows;
    const Recorder recorder = [&rows](const TraceRow& row) { rows.push_back(row); };
    run_algorithm(obj, BlockVector(layout, {1, 2, 3, 4}), ActivationModel::uniform(2), cfg,
                  recorder);
    return rows;
  };
  const auto a = run_once();
  const auto b = run_once();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].queries == b[i].queries);
    CHECK(a[i].iteration == b[i].iteration);
    CHECK(a[i].agent == b[i].agent);
    CHECK(a[i].loss == b[i].loss);  // bitwise
    CHECK(*a[i].grad_norm_sq == *b[i].grad_norm_sq);
  }
}

TEST_CASE("both estimators see the same activation sequence under one seed") {
  const BlockLayout layout({2, 2});
  const auto activations_for = [&](EstimatorKind kind) {
    ObjectiveHandle obj(half_norm_squared(layout));
    RunConfig cfg;
    cfg.budget = Budget::queries(200);
    cfg.estimator = kind;
    cfg.schedule = ManualSchedule::uniform(0.05, 0.1);
    cfg.seed = 9876;
    cfg.record_activations = true;
    const auto result = run_algorithm(obj, BlockVector(layout, {1, 1, 1, 1}),
                                      ActivationModel::uniform(2), cfg);
    return result.clock.activations;
  };
  const auto residual = activations_for(EstimatorKind::residual_async);
  const auto two_point = activations_for(EstimatorKind::two_point_async);
  CHECK(residual.size() == 200);
  CHECK(two_point.size() == 100);
  for (std::size_t i = 0; i < two_point.size(); ++i) {
    CHECK(residual[i] == two_point[i]);
  }
}

TEST_CASE("clock mode records wall events when asked") {
  const BlockLayout layout({1, 1});
  ObjectiveHandle obj(half_norm_squared(layout));
  RunConfig cfg;
  cfg.budget = Budget::queries(50);
  cfg.schedule = ManualSchedule::uniform(0.05, 0.1);
  cfg.seed = 4321;
  cfg.record_events = true;
  const auto result = run_algorithm(obj, BlockVector(layout, {1.0, 1.0}),
                                    ActivationModel::exponential_clocks({2.0, 1.0}), cfg);
  REQUIRE(result.clock.wall_events.size() == 50);
  for (std::size_t i = 1; i < result.clock.wall_events.size(); ++i) {
    CHECK(result.clock.wall_events[i].first > result.clock.wall_events[i - 1].first);
  }
}

TEST_CASE("tuned schedule inside the driver requires metadata") {
  const BlockLayout layout({2, 2});
  ObjectiveHandle obj(half_norm_squared(layout));  // metadata has no l0
  RunConfig cfg;
  cfg.budget = Budget::iterations(10);
  cfg.schedule = TunedSchedule{};
  cfg.seed = 1;
  CHECK_THROWS_AS(
      run_algorithm(obj, BlockVector(layout), ActivationModel::uniform(2), cfg),
      ConfigError);

  ObjectiveMetadata meta;
  meta.lipschitz_l0 = 1.0;
  ObjectiveHandle with_meta(half_norm_squared(layout), meta);
  const auto result =
      run_algorithm(with_meta, BlockVector(layout), ActivationModel::uniform(2), cfg);
  CHECK(result.clock.iteration == 10);
}

TEST_CASE("divergent runs abort with a flagged partial result") {
  const BlockLayout layout({1});
  auto fn = std::make_shared<FunctionObjective>(
      layout, [](const BlockVector& x) { return 1e15 * x[0]; });
  ObjectiveHandle obj(fn);
  RunConfig cfg;
  cfg.budget = Budget::queries(100);
  cfg.schedule = ManualSchedule::uniform(0.5, 0.01);
  cfg.seed = 5;
  const auto result =
      run_algorithm(obj, BlockVector(layout, {0.0}), ActivationModel::categorical({1.0}), cfg);
  CHECK(result.diverged);
  CHECK(result.clock.queries < 100);
  CHECK_FALSE(result.divergence_detail.empty());
}
