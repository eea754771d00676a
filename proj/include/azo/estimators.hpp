// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>

#include "azo/objectives.hpp"
#include "azo/sampling.hpp"

namespace azo {

// Gradient estimates whose norm exceeds this trip a DivergenceError instead
// of silently cascading into NaNs.
inline constexpr double kEstimateNormGuard = 1e12;

// Per-agent estimator memory. last_value and last_direction always appear
// together: they describe the agent's most recent perturbed query.
struct AgentState {
  int agent = 0;
  double step_size = 0.0;        // alpha_i > 0
  double smoothing = 0.0;        // mu_i > 0
  std::optional<double> last_value;
  std::optional<PerturbationDirection> last_direction;
  std::optional<std::uint64_t> last_update_iter;
  bool bootstrap_done = false;
};

// Block-sparse gradient estimate: scale * direction, zero outside the
// owning agent's block.
class GradientEstimate {
 public:
  GradientEstimate(PerturbationDirection direction, double scale)
      : direction_(std::move(direction)), scale_(scale) {}

  const PerturbationDirection& direction() const { return direction_; }
  double scale() const { return scale_; }
  int agent() const { return direction_.agent(); }

  double squared_norm() const { return scale_ * scale_ * direction_.squared_norm(); }
  BlockVector as_full() const;

 private:
  PerturbationDirection direction_;
  double scale_;
};

// --- Centralized estimators (full-dimension perturbations) ---------------

// f(x + mu u)/mu * u with u ~ N(0, I_n). One query.
BlockVector one_point_centralized(ObjectiveHandle& obj, const BlockVector& x, double mu,
                                  RngStream& rng);

// (f(x + mu u) - f(x))/mu * u. Two queries.
BlockVector two_point_centralized(ObjectiveHandle& obj, const BlockVector& x, double mu,
                                  RngStream& rng);

// (f(x + mu u) - f(x - mu u))/(2 mu) * u. Two queries. Centralized only:
// its asynchronous extension loses unbiasedness and is out of scope.
BlockVector symmetric_two_point_centralized(ObjectiveHandle& obj, const BlockVector& x,
                                            double mu, RngStream& rng);

// One query per call; differences the fresh perturbed value against the
// previous one. The first call (no prev_value) is a bootstrap: it returns
// no estimate and hands back the value to store.
struct ResidualStep {
  std::optional<BlockVector> estimate;
  double value = 0.0;  // fresh query result, to be carried into the next call
};
ResidualStep residual_centralized(ObjectiveHandle& obj, const BlockVector& x,
                                  std::optional<double> prev_value, double mu, RngStream& rng);

// --- Asynchronous block estimators (one agent per activation) ------------

// Residual feedback under asynchrony: one query at x + mu_i u per
// activation, differenced against the agent's previous perturbed query
// (made up to many global iterations ago, possibly at a decision point
// other agents have since changed). First activation bootstraps: stores
// the query and returns nullopt.
std::optional<GradientEstimate> residual_async(ObjectiveHandle& obj, const BlockVector& x,
                                               AgentState& state, std::uint64_t iteration,
                                               RngStream& rng);

// Baseline selection for the asynchronous two-point estimator.
enum class TwoPointBaseline {
  // Two queries per activation: f(x + mu u) and f(x) both fresh.
  fresh_query,
  // Single query per activation: reuse the agent's previous perturbed query
  // value as the baseline. Exposed for sensitivity studies only; it carries
  // no unbiasedness claim and needs a bootstrap activation.
  stored_value,
};

std::optional<GradientEstimate> two_point_async(ObjectiveHandle& obj, const BlockVector& x,
                                                AgentState& state, std::uint64_t iteration,
                                                RngStream& rng,
                                                TwoPointBaseline baseline = TwoPointBaseline::fresh_query);

}  // namespace azo
