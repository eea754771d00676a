// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "azo/block_vector.hpp"
#include "azo/rng.hpp"

namespace azo {

// Where a metadata constant came from: a closed form, a provable upper
// bound, or a sampled estimate (usable for diagnostics only).
enum class ConstantProvenance { exact, analytic_bound, empirical };

struct ObjectiveMetadata {
  std::optional<double> lipschitz_l0;   // |f(x)-f(y)| <= L0 ||x-y||
  std::optional<double> smoothness_l1;  // ||grad f(x)-grad f(y)|| <= L1 ||x-y||
  std::optional<double> lower_bound;    // f(x) >= f* everywhere
  ConstantProvenance provenance = ConstantProvenance::exact;
};

// Zero-mean additive evaluation noise with a variance cap.
struct NoiseSpec {
  enum class Kind { additive_uniform, additive_gaussian_truncated };
  Kind kind = Kind::additive_uniform;
  double variance_bound = 0.0;  // >= 0; the injected variance never exceeds it
};

// A real-valued function of a block-structured decision vector.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual double value(const BlockVector& x) const = 0;
  virtual const BlockLayout& layout() const = 0;
};

// Objective with an exact gradient, used as a validation oracle. The
// optimization path itself never calls gradient().
class DifferentiableObjective : public Objective {
 public:
  virtual BlockVector gradient(const BlockVector& x) const = 0;
};

// Wraps an arbitrary callable; handy for tests and custom objectives.
class FunctionObjective final : public Objective {
 public:
  FunctionObjective(BlockLayout layout, std::function<double(const BlockVector&)> fn)
      : layout_(std::move(layout)), fn_(std::move(fn)) {}

  double value(const BlockVector& x) const override { return fn_(x); }
  const BlockLayout& layout() const override { return layout_; }

 private:
  BlockLayout layout_;
  std::function<double(const BlockVector&)> fn_;
};

// f(x) = 1/2 x'Ax + b'x + c with symmetric A. Serves as the analytic test
// bed: its gradient, block-smoothed value and smoothed gradient all have
// closed forms.
class QuadraticObjective final : public DifferentiableObjective {
 public:
  QuadraticObjective(BlockLayout layout, Eigen::MatrixXd a, Eigen::VectorXd b, double c);

  double value(const BlockVector& x) const override;
  BlockVector gradient(const BlockVector& x) const override;
  const BlockLayout& layout() const override { return layout_; }

  const Eigen::MatrixXd& matrix() const { return a_; }
  const Eigen::VectorXd& linear() const { return b_; }
  double constant() const { return c_; }

  double spectral_norm() const { return spectral_norm_; }
  double trace_block(int agent) const;

  // Unique minimizer (requires positive definite A).
  BlockVector minimizer() const;

  ObjectiveMetadata metadata() const;

 private:
  BlockLayout layout_;
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  double c_;
  double spectral_norm_;
};

// Random positive definite quadratic for benchmarking: A = G'G/n + 0.5 I.
QuadraticObjective random_quadratic(const BlockLayout& layout, RngStream& rng);

// Black-box query handle: counts every evaluation, optionally injects
// bounded-variance noise, and rejects non-finite results.
class ObjectiveHandle {
 public:
  explicit ObjectiveHandle(std::shared_ptr<const Objective> fn,
                           ObjectiveMetadata metadata = {},
                           std::optional<NoiseSpec> noise = std::nullopt,
                           RngStream noise_rng = RngStream());

  // One black-box query: increments the counter by exactly 1.
  double evaluate(const BlockVector& x);

  // Noiseless, uncounted diagnostic evaluation (for trace records and
  // oracles; never part of the query budget).
  double probe(const BlockVector& x) const;

  std::uint64_t query_count() const { return queries_; }
  const BlockLayout& layout() const { return fn_->layout(); }
  const Objective& function() const { return *fn_; }
  const ObjectiveMetadata& metadata() const { return meta_; }
  ObjectiveMetadata& metadata() { return meta_; }
  const std::optional<NoiseSpec>& noise() const { return noise_; }

 private:
  std::shared_ptr<const Objective> fn_;
  ObjectiveMetadata meta_;
  std::optional<NoiseSpec> noise_;
  RngStream noise_rng_;
  std::uint64_t queries_ = 0;
};

// Converters between the library's block vectors and Eigen.
Eigen::Map<const Eigen::VectorXd> as_eigen(const BlockVector& x);
BlockVector from_eigen(const BlockLayout& layout, const Eigen::VectorXd& v);

}  // namespace azo
