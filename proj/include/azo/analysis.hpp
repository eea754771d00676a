// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "azo/estimators.hpp"
#include "azo/objectives.hpp"

namespace azo {

struct MonteCarloScalar {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

struct MonteCarloBlock {
  std::vector<double> mean;
  std::vector<double> std_error;  // per coordinate
  std::size_t samples = 0;
};

// Monte-Carlo evaluator of the per-agent Gaussian smoothing of an objective
// and of its block gradient. Operates on the noiseless function directly;
// draws are never charged to any query budget.
class SmoothingOracle {
 public:
  SmoothingOracle(const Objective& fn, double mu, std::size_t samples);

  // Mean of f(x + mu u) over block-sparse Gaussian draws on `agent`.
  MonteCarloScalar value(const BlockVector& x, int agent, RngStream& rng) const;

  // Mean of (f(x + mu u) - f(x))/mu * u restricted to the agent's block.
  // Subtracting the deterministic f(x) leaves the expectation unchanged and
  // shrinks the Monte-Carlo variance.
  MonteCarloBlock gradient_block(const BlockVector& x, int agent, RngStream& rng) const;

  // Both estimates from one set of draws (each query is reused for the
  // value mean and the gradient mean).
  std::pair<MonteCarloScalar, MonteCarloBlock> value_and_gradient(const BlockVector& x,
                                                                  int agent,
                                                                  RngStream& rng) const;

  double mu() const { return mu_; }
  std::size_t samples() const { return samples_; }

 private:
  const Objective* fn_;
  double mu_;
  std::size_t samples_;
};

// Closed forms for quadratics: block smoothing only lifts the value by
// (mu^2/2) * trace of the block diagonal and leaves the gradient intact.
double smoothed_value_exact(const QuadraticObjective& q, const BlockVector& x, int agent,
                            double mu);
BlockVector smoothed_gradient_exact(const QuadraticObjective& q, const BlockVector& x,
                                    int agent);

// --- Smoothing error bounds ----------------------------------------------

struct SmoothingErrorCase {
  int point_index = 0;
  int agent = 0;
  double value_error = 0.0;  // |f_mu(x) - f(x)|
  double value_bound = 0.0;  // (mu^2/2) L1 n_i
  double value_tolerance = 0.0;  // 3 * stderr of the MC estimate (0 if exact)
  double grad_error = 0.0;   // ||grad_i f_mu(x) - grad_i f(x)||
  double grad_bound = 0.0;   // (mu/2) L1 (n_i + 3)^(3/2)
  double grad_tolerance = 0.0;
  bool ok = true;
};

struct SmoothingErrorReport {
  std::vector<SmoothingErrorCase> cases;
  double max_value_slack = 0.0;  // max of (error - bound); negative means margin
  double max_grad_slack = 0.0;
  int violations = 0;
  bool all_ok() const { return violations == 0; }
};

// Checks |f_mu - f| and ||grad_i f_mu - grad_i f|| against the smoothing
// error bounds for every point and every block, with Monte-Carlo noise
// absorbed into a 3-standard-error allowance. Quadratics take the exact
// path (no Monte Carlo, zero tolerance).
SmoothingErrorReport check_smoothing_error_bounds(const DifferentiableObjective& fn,
                                                  std::span<const BlockVector> points,
                                                  double mu, double l1,
                                                  std::size_t mc_samples, RngStream& rng);

// --- Geometric recursion bounds ------------------------------------------

// Parameters of the scalar recursion
//     V_k <= gamma (V_{k-1} + beta V_{k-2} + ... + beta^{k-1} V_0) + M,
// admissible only when 0 < gamma + beta < 1.
struct SequenceBoundParams {
  double gamma = 0.0;
  double beta = 0.0;
  double additive_const = 0.0;  // M >= 0
  double v0 = 0.0;

  SequenceBoundParams(double gamma, double beta, double additive_const, double v0);
};

// Closed-form per-step bound, valid for k >= 1:
//     V_k <= gamma (gamma+beta)^(k-1) V_0
//            + (1 - beta - gamma (gamma+beta)^(k-1)) / (1 - (gamma+beta)) * M.
double recursion_bound(const SequenceBoundParams& params, std::uint64_t k);

// Sum bound on sum_{k=0}^{T-1} V_k in the published constant form,
//     (1-beta)/(1-(gamma+beta)) V_0 + (T-1)(1-beta)/(1-(gamma+beta)) M
//         - gamma/(1-(gamma+beta))^2 M,
// which replaces the truncated geometric tail by its infinite-horizon
// limit. That substitution over-subtracts: the form is a valid upper bound
// only when V_0 >= M/(1-(gamma+beta)); otherwise the extremal sequence
// exceeds it by gamma (gamma+beta)^(T-1) (M/(1-(gamma+beta)) - V_0) /
// (1-(gamma+beta)). See recursion_sum_exact for the exact finite-horizon
// form.
double recursion_sum_bound(const SequenceBoundParams& params, std::uint64_t horizon);

// Exact finite-horizon closed form of V_0 + sum_{k=1}^{T-1} (per-step
// bound): a valid upper bound for every admissible sequence, attained with
// equality by the extremal one.
double recursion_sum_exact(const SequenceBoundParams& params, std::uint64_t horizon);

// The extremal sequence attaining the recursion with equality at every
// step; the tightest admissible sequence, used to exercise the bounds.
std::vector<double> extremal_recursion_sequence(const SequenceBoundParams& params,
                                                std::uint64_t horizon);

// Instantiates the recursion parameters that govern the accumulated second
// moments of the asynchronous residual estimator:
//     gamma = 2 n_bar L0^2 alpha^2 (T-1) / mu^2,  beta = 1 - p_min,
//     M = 4 L0^2 ((4 + n_bar)^2 + n_bar^2).
// Rejects parameter sets with gamma + beta >= 1.
SequenceBoundParams estimator_moment_recursion_params(double l0, int n_bar, double alpha,
                                                      double mu, double p_min,
                                                      std::uint64_t horizon, double v0);

// --- Second-moment tracking ----------------------------------------------

// Accumulates ||G||^2 of block gradient estimates per agent, in windows so
// early and late phases of a run can be compared.
class SecondMomentTracker {
 public:
  explicit SecondMomentTracker(int num_agents);

  void add(const GradientEstimate& estimate);
  void add(int agent, double squared_norm);
  void begin_window();

  std::uint64_t count() const;
  std::uint64_t count(int agent) const;
  double mean() const;                // over all agents, all windows
  double mean(int agent) const;       // one agent, all windows
  std::size_t num_windows() const { return windows_.size(); }
  double window_mean(std::size_t window) const;

 private:
  struct Cell {
    double sum = 0.0;
    std::uint64_t n = 0;
  };
  std::vector<std::vector<Cell>> windows_;  // windows_[w][agent]
};

// Sampled Lipschitz / smoothness estimates over a Gaussian point cloud;
// usable for diagnostics only, never as proof-grade constants.
struct EstimatedConstants {
  double l0 = 0.0;
  double l1 = 0.0;
};
EstimatedConstants estimate_constants(const DifferentiableObjective& fn,
                                      std::size_t cloud_size, double radius, RngStream& rng);

}  // namespace azo
