// SPDX-License-Identifier: Apache-2.0
#include "azo/estimators.hpp"

#include <cmath>
#include <sstream>

namespace azo {
namespace {

void require_positive_mu(double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw ConfigError("smoothing parameter must be positive and finite");
  }
}

BlockVector scaled_full_direction(const BlockLayout& layout, const std::vector<double>& u,
                                  double scale) {
  std::vector<double> values(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    values[i] = scale * u[i];
  }
  return BlockVector(layout, std::move(values));
}

BlockVector perturbed(const BlockVector& x, double mu, const std::vector<double>& u) {
  std::vector<double> values(x.values().begin(), x.values().end());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] += mu * u[i];
  }
  return BlockVector(x.layout(), std::move(values));
}

void guard_estimate(const GradientEstimate& estimate, std::uint64_t iteration) {
  const double norm = std::sqrt(estimate.squared_norm());
  if (!(norm <= kEstimateNormGuard)) {
    std::ostringstream msg;
    msg << "gradient estimate norm " << norm << " exceeded guard " << kEstimateNormGuard
        << " at iteration " << iteration << " (agent " << estimate.agent() << ")";
    throw DivergenceError(msg.str(), iteration, estimate.agent(), norm);
  }
}

void store_query(AgentState& state, double value, PerturbationDirection direction,
                 std::uint64_t iteration) {
  state.last_value = value;
  state.last_direction = std::move(direction);
  state.last_update_iter = iteration;
  state.bootstrap_done = true;
}

}  // namespace

BlockVector GradientEstimate::as_full() const {
  BlockVector full = direction_.as_full_vector();
  for (double& v : full.block(direction_.agent())) {
    v *= scale_;
  }
  return full;
}

BlockVector one_point_centralized(ObjectiveHandle& obj, const BlockVector& x, double mu,
                                  RngStream& rng) {
  require_positive_mu(mu);
  const auto u = sample_standard_gaussian(x.size(), rng);
  const double value = obj.evaluate(perturbed(x, mu, u));
  return scaled_full_direction(x.layout(), u, value / mu);
}

BlockVector two_point_centralized(ObjectiveHandle& obj, const BlockVector& x, double mu,
                                  RngStream& rng) {
  require_positive_mu(mu);
  const auto u = sample_standard_gaussian(x.size(), rng);
  const double forward = obj.evaluate(perturbed(x, mu, u));
  const double base = obj.evaluate(x);
  return scaled_full_direction(x.layout(), u, (forward - base) / mu);
}

BlockVector symmetric_two_point_centralized(ObjectiveHandle& obj, const BlockVector& x,
                                            double mu, RngStream& rng) {
  require_positive_mu(mu);
  const auto u = sample_standard_gaussian(x.size(), rng);
  const double forward = obj.evaluate(perturbed(x, mu, u));
  const double backward = obj.evaluate(perturbed(x, -mu, u));
  return scaled_full_direction(x.layout(), u, (forward - backward) / (2.0 * mu));
}

ResidualStep residual_centralized(ObjectiveHandle& obj, const BlockVector& x,
                                  std::optional<double> prev_value, double mu, RngStream& rng) {
  require_positive_mu(mu);
  const auto u = sample_standard_gaussian(x.size(), rng);
  const double value = obj.evaluate(perturbed(x, mu, u));
  if (!prev_value) {
    return {std::nullopt, value};
  }
  return {scaled_full_direction(x.layout(), u, (value - *prev_value) / mu), value};
}

std::optional<GradientEstimate> residual_async(ObjectiveHandle& obj, const BlockVector& x,
                                               AgentState& state, std::uint64_t iteration,
                                               RngStream& rng) {
  require_positive_mu(state.smoothing);
  auto u = sample_block_gaussian(x.layout(), state.agent, rng);
  const double value = obj.evaluate(axpy_block(x, state.smoothing, u));
  if (!state.bootstrap_done) {
    store_query(state, value, std::move(u), iteration);
    return std::nullopt;
  }
  GradientEstimate estimate(u, (value - *state.last_value) / state.smoothing);
  guard_estimate(estimate, iteration);
  store_query(state, value, std::move(u), iteration);
  return estimate;
}

std::optional<GradientEstimate> two_point_async(ObjectiveHandle& obj, const BlockVector& x,
                                                AgentState& state, std::uint64_t iteration,
                                                RngStream& rng, TwoPointBaseline baseline) {
  require_positive_mu(state.smoothing);
  auto u = sample_block_gaussian(x.layout(), state.agent, rng);
  const double forward = obj.evaluate(axpy_block(x, state.smoothing, u));
  if (baseline == TwoPointBaseline::fresh_query) {
    const double base = obj.evaluate(x);
    GradientEstimate estimate(u, (forward - base) / state.smoothing);
    guard_estimate(estimate, iteration);
    store_query(state, base, std::move(u), iteration);
    return estimate;
  }
  // stored_value: single query per activation, baseline taken from the
  // agent's previous perturbed query.
  if (!state.bootstrap_done) {
    store_query(state, forward, std::move(u), iteration);
    return std::nullopt;
  }
  GradientEstimate estimate(u, (forward - *state.last_value) / state.smoothing);
  guard_estimate(estimate, iteration);
  store_query(state, forward, std::move(u), iteration);
  return estimate;
}

}  // namespace azo
