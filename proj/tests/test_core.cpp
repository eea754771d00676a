// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "azo/block_vector.hpp"
#include "azo/rng.hpp"
#include "azo/sampling.hpp"

using namespace azo;

TEST_CASE("block layout invariants") {
  const BlockLayout layout({2, 3, 1});
  CHECK(layout.num_blocks() == 3);
  CHECK(layout.total_dim() == 6);
  CHECK(layout.block_offset(0) == 0);
  CHECK(layout.block_offset(1) == 2);
  CHECK(layout.block_offset(2) == 5);
  CHECK_FALSE(layout.is_uniform());
  CHECK(BlockLayout::uniform(5, 10).is_uniform());
  CHECK(BlockLayout::uniform(5, 10).uniform_dim() == 10);

  CHECK_THROWS_AS(BlockLayout(std::vector<int>{}), LayoutError);
  CHECK_THROWS_AS(BlockLayout({2, 0}), LayoutError);
  CHECK_THROWS_AS(BlockLayout({-1}), LayoutError);
  CHECK_THROWS_AS(layout.require_valid_block(3), LayoutError);
}

TEST_CASE("block vector views") {
  const BlockLayout layout({2, 3});
  BlockVector x(layout, {1, 2, 3, 4, 5});
  CHECK(x.block(0).size() == 2);
  CHECK(x.block(1).size() == 3);
  CHECK(x.block(1)[0] == 3.0);
  CHECK(x.squared_norm() == doctest::Approx(55.0));
  CHECK_THROWS_AS(BlockVector(layout, {1, 2, 3}), LayoutError);
}

TEST_CASE("block gaussian direction is sparse outside its block") {
  const BlockLayout layout({2, 3});
  RngStream rng(7, 1);
  const auto u = sample_block_gaussian(layout, 0, rng);
  const auto full = u.as_full_vector();
  CHECK(full[2] == 0.0);
  CHECK(full[3] == 0.0);
  CHECK(full[4] == 0.0);
  CHECK(full.squared_norm() == doctest::Approx(u.squared_norm()));
  CHECK_THROWS_AS(sample_block_gaussian(layout, 2, rng), LayoutError);
  CHECK_THROWS_AS(sample_block_gaussian(layout, -1, rng), LayoutError);
}

TEST_CASE("block gaussian moments match the standard normal") {
  const BlockLayout layout({2, 3});
  RngStream rng(2024, 11);
  constexpr int kDraws = 1000000;
  double coord_sum[3] = {0, 0, 0};
  for (int s = 0; s < kDraws; ++s) {
    const auto u = sample_block_gaussian(layout, 1, rng);
    const auto block = u.block_values();
    for (int j = 0; j < 3; ++j) coord_sum[j] += block[j];
  }
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(coord_sum[j] / kDraws) <= 4e-3);
  }
}

TEST_CASE("block gaussian squared and fourth norm moments") {
  const BlockLayout layout({5});
  RngStream rng(99, 3);
  constexpr int kDraws = 1000000;
  double sum_sq = 0.0;
  double sum_quad = 0.0;
  double m2_quad = 0.0;
  double mean_quad = 0.0;
  for (int s = 0; s < kDraws; ++s) {
    const auto u = sample_block_gaussian(layout, 0, rng);
    const double sq = u.squared_norm();
    sum_sq += sq;
    const double quad = sq * sq;
    sum_quad += quad;
    const double delta = quad - mean_quad;
    mean_quad += delta / (s + 1);
    m2_quad += delta * (quad - mean_quad);
  }
  // E||u||^2 = n
  CHECK(std::abs(sum_sq / kDraws - 5.0) <= 0.02);
  // E||u||^4 = n(n+2), within 3 empirical standard errors
  const double se = std::sqrt(m2_quad / (kDraws - 1) / kDraws);
  CHECK(std::abs(sum_quad / kDraws - 35.0) <= 3.0 * se);
}

TEST_CASE("categorical sampling") {
  RngStream rng(5, 17);

  SUBCASE("degenerate distribution") {
    const double probs[] = {1.0};
    for (int s = 0; s < 100; ++s) {
      CHECK(sample_categorical(probs, rng) == 0);
    }
  }

  SUBCASE("uniform over five outcomes") {
    const std::vector<double> probs(5, 0.2);
    constexpr int kDraws = 1000000;
    int counts[5] = {0, 0, 0, 0, 0};
    for (int s = 0; s < kDraws; ++s) {
      counts[sample_categorical(probs, rng)] += 1;
    }
    for (int i = 0; i < 5; ++i) {
      CHECK(std::abs(static_cast<double>(counts[i]) / kDraws - 0.2) <= 0.0012);
    }
  }

  SUBCASE("skewed distribution") {
    const std::vector<double> probs = {0.9, 0.1};
    constexpr int kDraws = 1000000;
    int zero_count = 0;
    for (int s = 0; s < kDraws; ++s) {
      if (sample_categorical(probs, rng) == 0) zero_count += 1;
    }
    CHECK(std::abs(static_cast<double>(zero_count) / kDraws - 0.9) <= 0.0009);
  }

  SUBCASE("zero-mass outcomes are never drawn") {
    const std::vector<double> probs = {0.0, 1.0, 0.0};
    for (int s = 0; s < 100; ++s) {
      CHECK(sample_categorical(probs, rng) == 1);
    }
  }

  SUBCASE("validation") {
    const std::vector<double> negative = {1.2, -0.2};
    CHECK_THROWS_AS(sample_categorical(negative, rng), ConfigError);
    const std::vector<double> unnormalized = {0.5, 0.4};
    CHECK_THROWS_AS(sample_categorical(unnormalized, rng), ConfigError);
    CHECK_THROWS_AS(sample_categorical({}, rng), ConfigError);
  }
}

TEST_CASE("axpy_block arithmetic") {
  SUBCASE("zero scale leaves x unchanged") {
    const BlockLayout layout({2, 3});
    const BlockVector x(layout, {1, 2, 3, 4, 5});
    const PerturbationDirection u(layout, 1, {7, 8, 9});
    const auto y = axpy_block(x, 0.0, u);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == x[i]);
  }

  SUBCASE("additive identity from zero") {
    const BlockLayout layout({2, 2});
    const BlockVector x(layout);
    const PerturbationDirection u(layout, 0, {1, 2});
    const auto y = axpy_block(x, 1.0, u);
    CHECK(y[0] == 1.0);
    CHECK(y[1] == 2.0);
    CHECK(y[2] == 0.0);
    CHECK(y[3] == 0.0);
  }

  SUBCASE("negative scale on a middle block") {
    const BlockLayout layout({1, 1, 1});
    const BlockVector x(layout, {1, 1, 1});
    const PerturbationDirection u(layout, 1, {3});
    const auto y = axpy_block(x, -2.0, u);
    CHECK(y[0] == 1.0);
    CHECK(y[1] == -5.0);
    CHECK(y[2] == 1.0);
  }

  SUBCASE("layout mismatch") {
    const BlockVector x(BlockLayout({2, 3}));
    const PerturbationDirection u(BlockLayout({2, 2}), 0, {1, 2});
    CHECK_THROWS_AS(axpy_block(x, 1.0, u), LayoutError);
  }
}

TEST_CASE("rng streams replay bit-identically") {
  RngStream a(42, 3);
  RngStream b(42, 3);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  // normal draws replay too (including the cached spare)
  RngStream c(42, 3);
  RngStream d(42, 3);
  for (int i = 0; i < 1001; ++i) {
    CHECK(c.normal() == d.normal());
  }
}

TEST_CASE("distinct stream ids decorrelate") {
  RngStream a(42, 1);
  RngStream b(42, 2);
  int equal = 0;
  for (int i = 0; i < 1000; ++i) {
    if (a.next_u64() == b.next_u64()) equal += 1;
  }
  CHECK(equal == 0);
}

TEST_CASE("sampling op sequences replay bit-identically") {
  const BlockLayout layout({3, 4});
  const auto run = [&](std::uint64_t seed) {
    RngStream rng(seed, 8);
    BlockVector x(layout);
    for (int k = 0; k < 50; ++k) {
      const auto u = sample_block_gaussian(layout, k % 2, rng);
      x = axpy_block(x, rng.uniform01() - 0.5, u);
    }
    return x;
  };
  const auto x1 = run(123);
  const auto x2 = run(123);
  for (std::size_t i = 0; i < x1.size(); ++i) {
    CHECK(x1[i] == x2[i]);
  }
}
