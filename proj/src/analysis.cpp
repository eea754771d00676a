// SPDX-License-Identifier: Apache-2.0
#include "azo/analysis.hpp"

#include <cmath>
#include <sstream>

#include "azo/sampling.hpp"

namespace azo {

SmoothingOracle::SmoothingOracle(const Objective& fn, double mu, std::size_t samples)
    : fn_(&fn), mu_(mu), samples_(samples) {
  if (!(mu > 0.0)) {
    throw ConfigError("smoothing oracle needs mu > 0");
  }
  if (samples < 2) {
    throw ConfigError("smoothing oracle needs at least 2 samples");
  }
}

MonteCarloScalar SmoothingOracle::value(const BlockVector& x, int agent, RngStream& rng) const {
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t s = 0; s < samples_; ++s) {
    const auto u = sample_block_gaussian(x.layout(), agent, rng);
    const double v = fn_->value(axpy_block(x, mu_, u));
    const double delta = v - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (v - mean);
  }
  const double variance = m2 / static_cast<double>(samples_ - 1);
  return {mean, std::sqrt(variance / static_cast<double>(samples_)), samples_};
}

MonteCarloBlock SmoothingOracle::gradient_block(const BlockVector& x, int agent,
                                                RngStream& rng) const {
  const auto dim = static_cast<std::size_t>(x.layout().block_dim(agent));
  const double base = fn_->value(x);
  std::vector<double> mean(dim, 0.0);
  std::vector<double> m2(dim, 0.0);
  for (std::size_t s = 0; s < samples_; ++s) {
    const auto u = sample_block_gaussian(x.layout(), agent, rng);
    const double scale = (fn_->value(axpy_block(x, mu_, u)) - base) / mu_;
    const auto block = u.block_values();
    for (std::size_t j = 0; j < dim; ++j) {
      const double v = scale * block[j];
      const double delta = v - mean[j];
      mean[j] += delta / static_cast<double>(s + 1);
      m2[j] += delta * (v - mean[j]);
    }
  }
  std::vector<double> std_error(dim, 0.0);
  for (std::size_t j = 0; j < dim; ++j) {
    std_error[j] =
        std::sqrt(m2[j] / static_cast<double>(samples_ - 1) / static_cast<double>(samples_));
  }
  return {std::move(mean), std::move(std_error), samples_};
}

std::pair<MonteCarloScalar, MonteCarloBlock> SmoothingOracle::value_and_gradient(
    const BlockVector& x, int agent, RngStream& rng) const {
  const auto dim = static_cast<std::size_t>(x.layout().block_dim(agent));
  const double base = fn_->value(x);
  double value_mean = 0.0;
  double value_m2 = 0.0;
  std::vector<double> mean(dim, 0.0);
  std::vector<double> m2(dim, 0.0);
  for (std::size_t s = 0; s < samples_; ++s) {
    const auto u = sample_block_gaussian(x.layout(), agent, rng);
    const double v = fn_->value(axpy_block(x, mu_, u));
    const double value_delta = v - value_mean;
    value_mean += value_delta / static_cast<double>(s + 1);
    value_m2 += value_delta * (v - value_mean);
    const double scale = (v - base) / mu_;
    const auto block = u.block_values();
    for (std::size_t j = 0; j < dim; ++j) {
      const double g = scale * block[j];
      const double delta = g - mean[j];
      mean[j] += delta / static_cast<double>(s + 1);
      m2[j] += delta * (g - mean[j]);
    }
  }
  MonteCarloScalar value{
      value_mean,
      std::sqrt(value_m2 / static_cast<double>(samples_ - 1) / static_cast<double>(samples_)),
      samples_};
  std::vector<double> std_error(dim, 0.0);
  for (std::size_t j = 0; j < dim; ++j) {
    std_error[j] =
        std::sqrt(m2[j] / static_cast<double>(samples_ - 1) / static_cast<double>(samples_));
  }
  return {value, MonteCarloBlock{std::move(mean), std::move(std_error), samples_}};
}

double smoothed_value_exact(const QuadraticObjective& q, const BlockVector& x, int agent,
                            double mu) {
  return q.value(x) + 0.5 * mu * mu * q.trace_block(agent);
}

BlockVector smoothed_gradient_exact(const QuadraticObjective& q, const BlockVector& x,
                                    int agent) {
  const BlockVector grad = q.gradient(x);
  BlockVector projected(q.layout());
  const auto src = grad.block(agent);
  auto dst = projected.block(agent);
  for (std::size_t j = 0; j < src.size(); ++j) {
    dst[j] = src[j];
  }
  return projected;
}

SmoothingErrorReport check_smoothing_error_bounds(const DifferentiableObjective& fn,
                                                  std::span<const BlockVector> points,
                                                  double mu, double l1,
                                                  std::size_t mc_samples, RngStream& rng) {
  if (!(l1 > 0.0)) {
    throw ConfigError("smoothing error check needs l1 > 0");
  }
  const auto* quadratic = dynamic_cast<const QuadraticObjective*>(&fn);
  SmoothingErrorReport report;
  const int blocks = fn.layout().num_blocks();
  for (std::size_t p = 0; p < points.size(); ++p) {
    const BlockVector& x = points[p];
    const double fx = fn.value(x);
    const BlockVector grad = fn.gradient(x);
    for (int agent = 0; agent < blocks; ++agent) {
      const double ni = fn.layout().block_dim(agent);
      SmoothingErrorCase entry;
      entry.point_index = static_cast<int>(p);
      entry.agent = agent;
      entry.value_bound = 0.5 * mu * mu * l1 * ni;
      entry.grad_bound = 0.5 * mu * l1 * std::pow(ni + 3.0, 1.5);

      if (quadratic != nullptr) {
        // |f_mu - f| = (mu^2/2) |trace of the block diagonal|, computed
        // directly to avoid cancellation against f(x).
        entry.value_error = 0.5 * mu * mu * std::abs(quadratic->trace_block(agent));
        // Smoothing leaves a quadratic's gradient unchanged.
        entry.grad_error = 0.0;
      } else {
        SmoothingOracle oracle(fn, mu, mc_samples);
        const auto [value, smoothed] = oracle.value_and_gradient(x, agent, rng);
        entry.value_error = std::abs(value.mean - fx);
        entry.value_tolerance = 3.0 * value.std_error;
        const auto exact_block = grad.block(agent);
        double err_sq = 0.0;
        double tol_sq = 0.0;
        for (std::size_t j = 0; j < smoothed.mean.size(); ++j) {
          const double d = smoothed.mean[j] - exact_block[j];
          err_sq += d * d;
          tol_sq += smoothed.std_error[j] * smoothed.std_error[j];
        }
        entry.grad_error = std::sqrt(err_sq);
        entry.grad_tolerance = 3.0 * std::sqrt(tol_sq);
      }

      entry.ok = entry.value_error <= entry.value_bound + entry.value_tolerance &&
                 entry.grad_error <= entry.grad_bound + entry.grad_tolerance;
      report.max_value_slack =
          std::max(report.max_value_slack, entry.value_error - entry.value_bound);
      report.max_grad_slack =
          std::max(report.max_grad_slack, entry.grad_error - entry.grad_bound);
      if (!entry.ok) {
        report.violations += 1;
      }
      report.cases.push_back(entry);
    }
  }
  return report;
}

SequenceBoundParams::SequenceBoundParams(double gamma_in, double beta_in, double additive_in,
                                         double v0_in)
    : gamma(gamma_in), beta(beta_in), additive_const(additive_in), v0(v0_in) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw DomainError("recursion bound needs gamma > 0");
  }
  if (!(beta > 0.0) || !(beta < 1.0)) {
    throw DomainError("recursion bound needs beta in (0, 1)");
  }
  if (!(gamma + beta < 1.0)) {
    std::ostringstream msg;
    msg << "recursion bound needs gamma + beta < 1, got " << gamma + beta;
    throw DomainError(msg.str());
  }
  if (additive_const < 0.0 || v0 < 0.0) {
    throw DomainError("recursion bound needs M >= 0 and V0 >= 0");
  }
}

double recursion_bound(const SequenceBoundParams& params, std::uint64_t k) {
  if (k < 1) {
    throw DomainError("per-step recursion bound is defined for k >= 1");
  }
  const double rate = params.gamma + params.beta;
  const double decay = std::pow(rate, static_cast<double>(k - 1));
  return params.gamma * decay * params.v0 +
         (1.0 - params.beta - params.gamma * decay) / (1.0 - rate) * params.additive_const;
}

double recursion_sum_bound(const SequenceBoundParams& params, std::uint64_t horizon) {
  if (horizon < 1) {
    throw DomainError("sum bound needs horizon >= 1");
  }
  const double rate = params.gamma + params.beta;
  const double head = (1.0 - params.beta) / (1.0 - rate);
  return head * params.v0 + static_cast<double>(horizon - 1) * head * params.additive_const -
         params.gamma / ((1.0 - rate) * (1.0 - rate)) * params.additive_const;
}

double recursion_sum_exact(const SequenceBoundParams& params, std::uint64_t horizon) {
  if (horizon < 1) {
    throw DomainError("sum bound needs horizon >= 1");
  }
  const double rate = params.gamma + params.beta;
  const double tail = std::pow(rate, static_cast<double>(horizon - 1));
  const double one_minus = 1.0 - rate;
  return (1.0 - params.beta - params.gamma * tail) / one_minus * params.v0 +
         static_cast<double>(horizon - 1) * (1.0 - params.beta) / one_minus *
             params.additive_const -
         params.gamma * (1.0 - tail) / (one_minus * one_minus) * params.additive_const;
}

std::vector<double> extremal_recursion_sequence(const SequenceBoundParams& params,
                                                std::uint64_t horizon) {
  std::vector<double> v;
  v.reserve(horizon);
  if (horizon == 0) return v;
  v.push_back(params.v0);
  // With W_k = V_{k-1} + beta V_{k-2} + ... + beta^{k-1} V_0, equality at
  // every step is V_k = gamma W_k + M and W_{k+1} = V_k + beta W_k.
  double w = params.v0;
  for (std::uint64_t k = 1; k < horizon; ++k) {
    const double vk = params.gamma * w + params.additive_const;
    v.push_back(vk);
    w = vk + params.beta * w;
  }
  return v;
}

SequenceBoundParams estimator_moment_recursion_params(double l0, int n_bar, double alpha,
                                                      double mu, double p_min,
                                                      std::uint64_t horizon, double v0) {
  if (!(l0 > 0.0) || n_bar < 1 || !(alpha > 0.0) || !(mu > 0.0) || !(p_min > 0.0) ||
      p_min >= 1.0 || horizon < 2) {
    throw DomainError(
        "moment recursion needs l0, alpha, mu > 0, p_min in (0,1), n_bar >= 1, horizon >= 2");
  }
  const double nb = static_cast<double>(n_bar);
  const double gamma =
      2.0 * nb * l0 * l0 * alpha * alpha * static_cast<double>(horizon - 1) / (mu * mu);
  const double beta = 1.0 - p_min;
  const double bound_const = 4.0 * l0 * l0 * ((4.0 + nb) * (4.0 + nb) + nb * nb);
  return SequenceBoundParams(gamma, beta, bound_const, v0);
}

SecondMomentTracker::SecondMomentTracker(int num_agents) {
  if (num_agents < 1) {
    throw ConfigError("tracker needs at least one agent");
  }
  windows_.emplace_back(static_cast<std::size_t>(num_agents));
}

void SecondMomentTracker::add(const GradientEstimate& estimate) {
  add(estimate.agent(), estimate.squared_norm());
}

void SecondMomentTracker::add(int agent, double squared_norm) {
  auto& cell = windows_.back().at(static_cast<std::size_t>(agent));
  cell.sum += squared_norm;
  cell.n += 1;
}

void SecondMomentTracker::begin_window() {
  windows_.emplace_back(windows_.front().size());
}

std::uint64_t SecondMomentTracker::count() const {
  std::uint64_t n = 0;
  for (const auto& window : windows_) {
    for (const auto& cell : window) n += cell.n;
  }
  return n;
}

std::uint64_t SecondMomentTracker::count(int agent) const {
  std::uint64_t n = 0;
  for (const auto& window : windows_) {
    n += window.at(static_cast<std::size_t>(agent)).n;
  }
  return n;
}

double SecondMomentTracker::mean() const {
  double sum = 0.0;
  std::uint64_t n = 0;
  for (const auto& window : windows_) {
    for (const auto& cell : window) {
      sum += cell.sum;
      n += cell.n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double SecondMomentTracker::mean(int agent) const {
  double sum = 0.0;
  std::uint64_t n = 0;
  for (const auto& window : windows_) {
    const auto& cell = window.at(static_cast<std::size_t>(agent));
    sum += cell.sum;
    n += cell.n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double SecondMomentTracker::window_mean(std::size_t window) const {
  double sum = 0.0;
  std::uint64_t n = 0;
  for (const auto& cell : windows_.at(window)) {
    sum += cell.sum;
    n += cell.n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

EstimatedConstants estimate_constants(const DifferentiableObjective& fn,
                                      std::size_t cloud_size, double radius, RngStream& rng) {
  if (cloud_size < 2) {
    throw ConfigError("constant estimation needs at least 2 cloud points");
  }
  const auto& layout = fn.layout();
  std::vector<BlockVector> cloud;
  cloud.reserve(cloud_size);
  for (std::size_t i = 0; i < cloud_size; ++i) {
    auto values = sample_standard_gaussian(layout.total_dim(), rng);
    for (double& v : values) v *= radius;
    cloud.emplace_back(layout, std::move(values));
  }
  EstimatedConstants est;
  std::vector<BlockVector> grads;
  grads.reserve(cloud_size);
  for (const auto& x : cloud) {
    grads.push_back(fn.gradient(x));
    est.l0 = std::max(est.l0, std::sqrt(grads.back().squared_norm()));
  }
  // Pairwise secant quotients plus short-range probes around each point.
  for (std::size_t i = 0; i + 1 < cloud_size; ++i) {
    const auto& xa = cloud[i];
    const auto& xb = cloud[i + 1];
    double dist_sq = 0.0;
    double diff_sq = 0.0;
    for (std::size_t k = 0; k < xa.size(); ++k) {
      const double dx = xa[k] - xb[k];
      dist_sq += dx * dx;
      const double dg = grads[i][k] - grads[i + 1][k];
      diff_sq += dg * dg;
    }
    if (dist_sq > 0.0) {
      est.l1 = std::max(est.l1, std::sqrt(diff_sq / dist_sq));
    }
  }
  const double h = 1e-4 * std::max(radius, 1.0);
  for (const auto& x : cloud) {
    auto direction = sample_standard_gaussian(x.size(), rng);
    double norm = 0.0;
    for (double d : direction) norm += d * d;
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    BlockVector probe = x;
    for (std::size_t k = 0; k < probe.size(); ++k) {
      probe[k] += h * direction[k] / norm;
    }
    const BlockVector g0 = fn.gradient(x);
    const BlockVector g1 = fn.gradient(probe);
    double diff_sq = 0.0;
    for (std::size_t k = 0; k < probe.size(); ++k) {
      const double dg = g1[k] - g0[k];
      diff_sq += dg * dg;
    }
    est.l1 = std::max(est.l1, std::sqrt(diff_sq) / h);
  }
  return est;
}

}  // namespace azo
