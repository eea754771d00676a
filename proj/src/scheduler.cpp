// SPDX-License-Identifier: Apache-2.0
#include "azo/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace azo {
namespace {

void validate_weights(const std::vector<double>& w, const char* what) {
  if (w.empty()) {
    throw ConfigError(std::string(what) + ": need at least one agent");
  }
  for (double v : w) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string(what) + ": entries must be positive and finite");
    }
  }
}

// Expands a 1-or-N manual schedule entry to N per-agent values.
std::vector<double> broadcast(const std::vector<double>& values, int n, const char* what) {
  if (values.size() == 1) {
    return std::vector<double>(static_cast<std::size_t>(n), values.front());
  }
  if (values.size() != static_cast<std::size_t>(n)) {
    throw ConfigError(std::string(what) + ": expected 1 or " + std::to_string(n) + " values");
  }
  return values;
}

}  // namespace

ActivationModel ActivationModel::categorical(std::vector<double> probs) {
  validate_weights(probs, "activation probabilities");
  double total = 0.0;
  for (double p : probs) total += p;
  if (std::abs(total - 1.0) > 1e-12) {
    throw ConfigError("activation probabilities sum to " + std::to_string(total) +
                      ", expected 1 within 1e-12");
  }
  return ActivationModel(Kind::categorical, std::move(probs));
}

ActivationModel ActivationModel::exponential_clocks(std::vector<double> rates) {
  validate_weights(rates, "activation rates");
  return ActivationModel(Kind::exponential_clocks, std::move(rates));
}

ActivationModel ActivationModel::uniform(int num_agents) {
  if (num_agents < 1) {
    throw ConfigError("need at least one agent");
  }
  return categorical(
      std::vector<double>(static_cast<std::size_t>(num_agents), 1.0 / num_agents));
}

std::vector<double> ActivationModel::probabilities() const {
  if (kind_ == Kind::categorical) {
    return weights_;
  }
  double total = 0.0;
  for (double r : weights_) total += r;
  std::vector<double> probs(weights_.size());
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    probs[i] = weights_[i] / total;
  }
  return probs;
}

double ActivationModel::min_probability() const {
  const auto probs = probabilities();
  return *std::min_element(probs.begin(), probs.end());
}

ActivationSampler::ActivationSampler(const ActivationModel& model, RngStream& rng)
    : model_(model) {
  if (model_.kind() == ActivationModel::Kind::exponential_clocks) {
    next_event_time_.resize(model_.weights().size());
    for (std::size_t i = 0; i < next_event_time_.size(); ++i) {
      next_event_time_[i] = rng.exponential(model_.weights()[i]);
    }
  }
}

Activation ActivationSampler::next(RngStream& rng) {
  if (model_.kind() == ActivationModel::Kind::categorical) {
    return {sample_categorical(model_.weights(), rng), std::nullopt};
  }
  const auto winner = static_cast<std::size_t>(
      std::min_element(next_event_time_.begin(), next_event_time_.end()) -
      next_event_time_.begin());
  const double when = next_event_time_[winner];
  next_event_time_[winner] = when + rng.exponential(model_.weights()[winner]);
  return {static_cast<int>(winner), when};
}

SchedulePair tuned_schedule(double l0, int n_bar, double p_min, std::uint64_t horizon,
                            TunedVariant variant) {
  if (!(l0 > 0.0) || n_bar < 1 || !(p_min > 0.0) || p_min > 1.0 || horizon < 1) {
    throw ConfigError("tuned schedule needs l0 > 0, n_bar >= 1, p_min in (0,1], horizon >= 1");
  }
  const double t = static_cast<double>(horizon);
  const double root_n = std::sqrt(static_cast<double>(n_bar));
  SchedulePair pair;
  if (variant == TunedVariant::dimension_in_mu) {
    pair.alpha = std::sqrt(p_min) / std::pow(t, 2.0 / 3.0);
    pair.mu = 2.0 * l0 * root_n / std::pow(t, 1.0 / 6.0);
  } else {
    pair.alpha = std::sqrt(p_min) / (root_n * std::pow(t, 2.0 / 3.0));
    pair.mu = 2.0 * l0 / std::pow(t, 1.0 / 6.0);
  }
  return pair;
}

std::uint64_t queries_per_activation(EstimatorKind kind, TwoPointBaseline baseline) {
  if (kind == EstimatorKind::residual_async) return 1;
  return baseline == TwoPointBaseline::fresh_query ? 2 : 1;
}

namespace {

struct ResolvedSchedule {
  std::vector<double> alpha;
  std::vector<double> mu;
};

ResolvedSchedule resolve_schedule(const ObjectiveHandle& obj, const ActivationModel& model,
                                  const RunConfig& config) {
  const int n = obj.layout().num_blocks();
  if (const auto* manual = std::get_if<ManualSchedule>(&config.schedule)) {
    ResolvedSchedule out{broadcast(manual->step_sizes, n, "step sizes"),
                         broadcast(manual->smoothings, n, "smoothing parameters")};
    for (double a : out.alpha) {
      if (!(a > 0.0)) throw ConfigError("step sizes must be positive");
    }
    for (double m : out.mu) {
      if (!(m > 0.0)) throw ConfigError("smoothing parameters must be positive");
    }
    return out;
  }
  const auto& tuned = std::get<TunedSchedule>(config.schedule);
  if (!obj.metadata().lipschitz_l0) {
    throw ConfigError("tuned schedule needs the objective's lipschitz constant (l0)");
  }
  if (!obj.layout().is_uniform()) {
    throw ConfigError("tuned schedule needs a uniform block layout");
  }
  std::uint64_t horizon = config.budget.limit;
  if (config.budget.kind == Budget::Kind::queries) {
    horizon = std::max<std::uint64_t>(
        1, horizon / queries_per_activation(config.estimator, config.two_point_baseline));
  }
  const auto pair = tuned_schedule(*obj.metadata().lipschitz_l0, obj.layout().uniform_dim(),
                                   model.min_probability(), horizon, tuned.variant);
  return {std::vector<double>(static_cast<std::size_t>(n), pair.alpha),
          std::vector<double>(static_cast<std::size_t>(n), pair.mu)};
}

}  // namespace

RunResult run_algorithm(ObjectiveHandle& obj, const BlockVector& x0,
                        const ActivationModel& model, const RunConfig& config,
                        const Recorder& recorder, const StepObserver& on_step) {
  if (model.num_agents() != obj.layout().num_blocks()) {
    throw ConfigError("activation model has " + std::to_string(model.num_agents()) +
                      " agents but the objective layout has " +
                      std::to_string(obj.layout().num_blocks()) + " blocks");
  }
  if (config.record_every < 1) {
    throw ConfigError("record_every must be >= 1");
  }
  const DifferentiableObjective* grad_oracle = nullptr;
  if (config.record_grad_norm) {
    grad_oracle = dynamic_cast<const DifferentiableObjective*>(&obj.function());
    if (grad_oracle == nullptr) {
      throw ConfigError("grad_norm recording needs an objective with an analytic gradient");
    }
  }

  const auto schedule = resolve_schedule(obj, model, config);
  const auto cost = queries_per_activation(config.estimator, config.two_point_baseline);

  RngStream scheduler_rng(config.seed, streams::kScheduler);
  std::vector<RngStream> agent_rng;
  agent_rng.reserve(static_cast<std::size_t>(model.num_agents()));
  for (int i = 0; i < model.num_agents(); ++i) {
    agent_rng.emplace_back(config.seed, streams::kAgentBase + static_cast<std::uint64_t>(i));
  }

  RunResult result{x0, {}, {}, false, {}};
  auto& clock = result.clock;
  result.states.reserve(static_cast<std::size_t>(model.num_agents()));
  for (int i = 0; i < model.num_agents(); ++i) {
    AgentState state;
    state.agent = i;
    state.step_size = schedule.alpha[static_cast<std::size_t>(i)];
    state.smoothing = schedule.mu[static_cast<std::size_t>(i)];
    result.states.push_back(std::move(state));
  }

  ActivationSampler sampler(model, scheduler_rng);
  const std::uint64_t start_queries = obj.query_count();
  std::uint64_t next_record = config.record_every;

  const auto budget_allows_next = [&]() {
    if (config.budget.kind == Budget::Kind::iterations) {
      return clock.iteration < config.budget.limit;
    }
    return clock.queries + cost <= config.budget.limit;
  };

  while (budget_allows_next()) {
    const Activation activation = sampler.next(scheduler_rng);
    auto& state = result.states[static_cast<std::size_t>(activation.agent)];
    auto& rng = agent_rng[static_cast<std::size_t>(activation.agent)];

    std::optional<GradientEstimate> estimate;
    try {
      switch (config.estimator) {
        case EstimatorKind::residual_async:
          estimate = residual_async(obj, result.x, state, clock.iteration, rng);
          break;
        case EstimatorKind::two_point_async:
          estimate = two_point_async(obj, result.x, state, clock.iteration, rng,
                                     config.two_point_baseline);
          break;
      }
    } catch (const DivergenceError& err) {
      result.diverged = true;
      result.divergence_detail = err.what();
      clock.iteration += 1;
      clock.queries = obj.query_count() - start_queries;
      break;
    }

    if (estimate) {
      result.x = axpy_block(result.x, -state.step_size * estimate->scale(),
                            estimate->direction());
    } else {
      clock.bootstraps += 1;
    }

    clock.iteration += 1;
    clock.queries = obj.query_count() - start_queries;
    if (config.record_activations) {
      clock.activations.push_back(activation.agent);
    }
    if (config.record_events && activation.event_time) {
      clock.wall_events.emplace_back(*activation.event_time, activation.agent);
    }
    if (on_step) {
      on_step(clock.iteration, activation.agent, result.x);
    }
    if (recorder) {
      while (next_record <= clock.queries) {
        TraceRow row;
        row.trial = config.trial_id;
        row.queries = next_record;
        row.iteration = clock.iteration;
        row.agent = activation.agent;
        row.loss = obj.probe(result.x);
        if (grad_oracle != nullptr) {
          row.grad_norm_sq = grad_oracle->gradient(result.x).squared_norm();
        }
        recorder(row);
        next_record += config.record_every;
      }
    }
  }
  return result;
}

}  // namespace azo
