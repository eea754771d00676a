// SPDX-License-Identifier: Apache-2.0
#include "azo/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace azo {

QuadraticObjective::QuadraticObjective(BlockLayout layout, Eigen::MatrixXd a, Eigen::VectorXd b,
                                       double c)
    : layout_(std::move(layout)), a_(std::move(a)), b_(std::move(b)), c_(c) {
  const auto n = static_cast<Eigen::Index>(layout_.total_dim());
  if (a_.rows() != n || a_.cols() != n || b_.size() != n) {
    throw LayoutError("quadratic dimensions do not match the layout");
  }
  const double asym = (a_ - a_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12) {
    std::ostringstream msg;
    msg << "quadratic matrix must be symmetric within 1e-12 (max asymmetry " << asym << ")";
    throw ConfigError(msg.str());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a_, Eigen::EigenvaluesOnly);
  spectral_norm_ = eig.eigenvalues().cwiseAbs().maxCoeff();
}

double QuadraticObjective::value(const BlockVector& x) const {
  const auto v = as_eigen(x);
  return 0.5 * v.dot(a_ * v) + b_.dot(v) + c_;
}

BlockVector QuadraticObjective::gradient(const BlockVector& x) const {
  const auto v = as_eigen(x);
  return from_eigen(layout_, a_ * v + b_);
}

double QuadraticObjective::trace_block(int agent) const {
  const auto off = static_cast<Eigen::Index>(layout_.block_offset(agent));
  const auto dim = static_cast<Eigen::Index>(layout_.block_dim(agent));
  return a_.block(off, off, dim, dim).trace();
}

BlockVector QuadraticObjective::minimizer() const {
  Eigen::LLT<Eigen::MatrixXd> llt(a_);
  if (llt.info() != Eigen::Success) {
    throw DomainError("quadratic has no unique minimizer (matrix not positive definite)");
  }
  return from_eigen(layout_, llt.solve(-b_));
}

ObjectiveMetadata QuadraticObjective::metadata() const {
  ObjectiveMetadata meta;
  meta.smoothness_l1 = spectral_norm_;
  Eigen::LLT<Eigen::MatrixXd> llt(a_);
  if (llt.info() == Eigen::Success) {
    const Eigen::VectorXd xstar = llt.solve(-b_);
    meta.lower_bound = 0.5 * xstar.dot(a_ * xstar) + b_.dot(xstar) + c_;
  }
  meta.provenance = ConstantProvenance::exact;
  return meta;
}

QuadraticObjective random_quadratic(const BlockLayout& layout, RngStream& rng) {
  const auto n = static_cast<Eigen::Index>(layout.total_dim());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      g(i, j) = rng.normal();
    }
  }
  Eigen::MatrixXd a = g.transpose() * g / static_cast<double>(n);
  a += 0.5 * Eigen::MatrixXd::Identity(n, n);
  a = ((a + a.transpose()) / 2.0).eval();
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    b(i) = rng.normal();
  }
  return QuadraticObjective(layout, std::move(a), std::move(b), 0.0);
}

ObjectiveHandle::ObjectiveHandle(std::shared_ptr<const Objective> fn, ObjectiveMetadata metadata,
                                 std::optional<NoiseSpec> noise, RngStream noise_rng)
    : fn_(std::move(fn)), meta_(metadata), noise_(noise), noise_rng_(noise_rng) {
  if (!fn_) {
    throw ConfigError("objective handle needs a function");
  }
  if (noise_ && (noise_->variance_bound < 0.0 || !std::isfinite(noise_->variance_bound))) {
    throw ConfigError("noise variance bound must be finite and non-negative");
  }
}

double ObjectiveHandle::evaluate(const BlockVector& x) {
  ++queries_;
  double result = fn_->value(x);
  if (noise_ && noise_->variance_bound > 0.0) {
    const double sigma = std::sqrt(noise_->variance_bound);
    switch (noise_->kind) {
      case NoiseSpec::Kind::additive_uniform: {
        // Uniform on [-a, a] has variance a^2/3.
        const double half_width = std::sqrt(3.0) * sigma;
        result += half_width * (2.0 * noise_rng_.uniform01() - 1.0);
        break;
      }
      case NoiseSpec::Kind::additive_gaussian_truncated: {
        // Clamping at +-6 sigma keeps the noise bounded; symmetric clamping
        // preserves the zero mean and can only shrink the variance.
        double draw = sigma * noise_rng_.normal();
        draw = std::clamp(draw, -6.0 * sigma, 6.0 * sigma);
        result += draw;
        break;
      }
    }
  }
  if (!std::isfinite(result)) {
    std::ostringstream msg;
    msg << "objective returned non-finite value " << result << " (query " << queries_ << ")";
    throw EvaluationError(msg.str(),
                          std::vector<double>(x.values().begin(), x.values().end()));
  }
  return result;
}

double ObjectiveHandle::probe(const BlockVector& x) const { return fn_->value(x); }

Eigen::Map<const Eigen::VectorXd> as_eigen(const BlockVector& x) {
  return {x.values().data(), static_cast<Eigen::Index>(x.size())};
}

BlockVector from_eigen(const BlockLayout& layout, const Eigen::VectorXd& v) {
  return BlockVector(layout, std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace azo
