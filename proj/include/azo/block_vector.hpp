// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "azo/errors.hpp"

namespace azo {

// Partition of a joint decision vector in R^n into per-agent blocks.
// Offsets are contiguous, non-overlapping and cover [0, n).
class BlockLayout {
 public:
  BlockLayout() = default;
  explicit BlockLayout(std::vector<int> block_dims);

  // N identical blocks of the given size.
  static BlockLayout uniform(int num_blocks, int block_dim);

  int num_blocks() const { return static_cast<int>(dims_.size()); }
  int block_dim(int block) const;
  std::size_t block_offset(int block) const;
  std::size_t total_dim() const { return total_; }

  // True when every block has the same dimension (the common block size
  // exists and uniform_dim() is valid).
  bool is_uniform() const;
  int uniform_dim() const;

  void require_valid_block(int block) const;

  friend bool operator==(const BlockLayout& a, const BlockLayout& b) {
    return a.dims_ == b.dims_;
  }

  const std::vector<int>& block_dims() const { return dims_; }

 private:
  std::vector<int> dims_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

// Dense joint decision vector with block views.
class BlockVector {
 public:
  BlockVector() = default;
  explicit BlockVector(BlockLayout layout);  // zero-initialized
  BlockVector(BlockLayout layout, std::vector<double> values);

  const BlockLayout& layout() const { return layout_; }
  std::size_t size() const { return values_.size(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  std::span<const double> block(int i) const;
  std::span<double> block(int i);

  double squared_norm() const;

 private:
  BlockLayout layout_;
  std::vector<double> values_;
};

// Block-sparse random direction: zero everywhere except one agent's block.
class PerturbationDirection {
 public:
  PerturbationDirection(BlockLayout layout, int agent, std::vector<double> block_values);

  const BlockLayout& layout() const { return layout_; }
  int agent() const { return agent_; }
  std::span<const double> block_values() const { return block_values_; }

  // Materialize as a dense vector (zero outside the owning block).
  BlockVector as_full_vector() const;

  double squared_norm() const;

 private:
  BlockLayout layout_;
  int agent_;
  std::vector<double> block_values_;
};

// Returns x with block(u.agent) += scale * u.block_values; other blocks are
// copied untouched.
BlockVector axpy_block(const BlockVector& x, double scale, const PerturbationDirection& u);

}  // namespace azo
