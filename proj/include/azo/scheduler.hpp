// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "azo/estimators.hpp"

namespace azo {

// How the single active agent is chosen at each global step. Categorical
// mode draws an index per step from fixed probabilities; clock mode races
// independent exponential waiting times, which induces the same activation
// distribution p_i = rate_i / sum(rates) while also producing event times.
class ActivationModel {
 public:
  enum class Kind { categorical, exponential_clocks };

  static ActivationModel categorical(std::vector<double> probs);
  static ActivationModel exponential_clocks(std::vector<double> rates);
  static ActivationModel uniform(int num_agents);

  Kind kind() const { return kind_; }
  int num_agents() const { return static_cast<int>(weights_.size()); }
  const std::vector<double>& weights() const { return weights_; }

  // Induced activation probabilities (identical to weights in categorical
  // mode, normalized rates in clock mode).
  std::vector<double> probabilities() const;
  double min_probability() const;

 private:
  ActivationModel(Kind kind, std::vector<double> weights)
      : kind_(kind), weights_(std::move(weights)) {}

  Kind kind_;
  std::vector<double> weights_;
};

struct Activation {
  int agent = 0;
  std::optional<double> event_time;  // clock mode only
};

// Draws the next activated agent. Clock mode keeps one pending event time
// per agent and always fires the earliest.
class ActivationSampler {
 public:
  ActivationSampler(const ActivationModel& model, RngStream& rng);

  Activation next(RngStream& rng);

 private:
  const ActivationModel& model_;
  std::vector<double> next_event_time_;  // clock mode
};

// Step-size / smoothing schedules. Manual values may be uniform (one entry)
// or per-agent (one entry per agent).
struct ManualSchedule {
  std::vector<double> step_sizes;
  std::vector<double> smoothings;

  static ManualSchedule uniform(double alpha, double mu) { return {{alpha}, {mu}}; }
};

// Two algebraic placements of the common block dimension in the tuned
// (horizon-dependent) schedule; both appear in the analysis this follows.
enum class TunedVariant { dimension_in_mu, dimension_in_alpha };

struct TunedSchedule {
  TunedVariant variant = TunedVariant::dimension_in_mu;
};

using ScheduleSpec = std::variant<ManualSchedule, TunedSchedule>;

struct SchedulePair {
  double alpha = 0.0;
  double mu = 0.0;
};

// alpha = sqrt(p_min)/T^(2/3), mu = 2 L0 sqrt(n_bar)/T^(1/6) in the default
// variant; the alternate variant moves sqrt(n_bar) from mu into 1/alpha.
SchedulePair tuned_schedule(double l0, int n_bar, double p_min, std::uint64_t horizon,
                            TunedVariant variant = TunedVariant::dimension_in_mu);

struct Budget {
  enum class Kind { iterations, queries };
  Kind kind = Kind::queries;
  std::uint64_t limit = 0;

  static Budget iterations(std::uint64_t t) { return {Kind::iterations, t}; }
  static Budget queries(std::uint64_t q) { return {Kind::queries, q}; }
};

enum class EstimatorKind { residual_async, two_point_async };

struct RunConfig {
  Budget budget = Budget::queries(10000);
  EstimatorKind estimator = EstimatorKind::residual_async;
  TwoPointBaseline two_point_baseline = TwoPointBaseline::fresh_query;
  ScheduleSpec schedule = ManualSchedule::uniform(0.5, 0.1);
  std::uint64_t seed = 0;
  std::uint32_t trial_id = 0;
  std::uint64_t record_every = 1;
  bool record_grad_norm = false;
  bool record_activations = false;  // keep the agent sequence in the clock
  bool record_events = false;       // keep (time, agent) pairs in clock mode
};

// One metrics record, emitted each time the query count crosses a multiple
// of record_every. `queries` holds the crossed grid point so rows align
// across estimators with different per-activation query costs.
struct TraceRow {
  std::uint32_t trial = 0;
  std::uint64_t queries = 0;
  std::uint64_t iteration = 0;
  int agent = 0;
  double loss = 0.0;
  std::optional<double> grad_norm_sq;
};

using Recorder = std::function<void(const TraceRow&)>;

// Called after every activation with the post-update decision vector.
using StepObserver = std::function<void(std::uint64_t iteration, int agent, const BlockVector&)>;

struct SimulationClock {
  std::uint64_t iteration = 0;   // number of activations
  std::uint64_t queries = 0;     // total evaluate() calls
  std::uint64_t bootstraps = 0;  // activations that stored a baseline only
  std::vector<std::pair<double, int>> wall_events;
  std::vector<int> activations;
};

struct RunResult {
  BlockVector x;
  SimulationClock clock;
  std::vector<AgentState> states;
  bool diverged = false;
  std::string divergence_detail;
};

// Asynchronous zeroth-order descent loop: repeatedly activate one agent,
// form its block gradient estimate, and update only that block,
//     x <- x - alpha_i * G_i,
// until the iteration or query budget is exhausted. Non-activated blocks
// are never touched. A divergence guard trip aborts the run, leaving the
// partial trace in place and the result flagged.
RunResult run_algorithm(ObjectiveHandle& obj, const BlockVector& x0,
                        const ActivationModel& model, const RunConfig& config,
                        const Recorder& recorder = {}, const StepObserver& on_step = {});

// Queries consumed by one activation of the configured estimator.
std::uint64_t queries_per_activation(EstimatorKind kind, TwoPointBaseline baseline);

}  // namespace azo
