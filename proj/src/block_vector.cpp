// SPDX-License-Identifier: Apache-2.0
#include "azo/block_vector.hpp"

#include <numeric>
#include <string>

namespace azo {

BlockLayout::BlockLayout(std::vector<int> block_dims) : dims_(std::move(block_dims)) {
  if (dims_.empty()) {
    throw LayoutError("block layout needs at least one block");
  }
  offsets_.reserve(dims_.size());
  for (int d : dims_) {
    if (d < 1) {
      throw LayoutError("block dimension must be positive, got " + std::to_string(d));
    }
    offsets_.push_back(total_);
    total_ += static_cast<std::size_t>(d);
  }
}

BlockLayout BlockLayout::uniform(int num_blocks, int block_dim) {
  if (num_blocks < 1) {
    throw LayoutError("need at least one block");
  }
  return BlockLayout(std::vector<int>(static_cast<std::size_t>(num_blocks), block_dim));
}

int BlockLayout::block_dim(int block) const {
  require_valid_block(block);
  return dims_[static_cast<std::size_t>(block)];
}

std::size_t BlockLayout::block_offset(int block) const {
  require_valid_block(block);
  return offsets_[static_cast<std::size_t>(block)];
}

bool BlockLayout::is_uniform() const {
  for (int d : dims_) {
    if (d != dims_.front()) return false;
  }
  return true;
}

int BlockLayout::uniform_dim() const {
  if (!is_uniform()) {
    throw LayoutError("layout has no common block dimension");
  }
  return dims_.front();
}

void BlockLayout::require_valid_block(int block) const {
  if (block < 0 || block >= num_blocks()) {
    throw LayoutError("block index " + std::to_string(block) + " out of range [0, " +
                      std::to_string(num_blocks()) + ")");
  }
}

BlockVector::BlockVector(BlockLayout layout)
    : layout_(std::move(layout)), values_(layout_.total_dim(), 0.0) {}

BlockVector::BlockVector(BlockLayout layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  if (values_.size() != layout_.total_dim()) {
    throw LayoutError("value count " + std::to_string(values_.size()) +
                      " does not match layout dimension " + std::to_string(layout_.total_dim()));
  }
}

std::span<const double> BlockVector::block(int i) const {
  return {values_.data() + layout_.block_offset(i),
          static_cast<std::size_t>(layout_.block_dim(i))};
}

std::span<double> BlockVector::block(int i) {
  return {values_.data() + layout_.block_offset(i),
          static_cast<std::size_t>(layout_.block_dim(i))};
}

double BlockVector::squared_norm() const {
  return std::inner_product(values_.begin(), values_.end(), values_.begin(), 0.0);
}

PerturbationDirection::PerturbationDirection(BlockLayout layout, int agent,
                                             std::vector<double> block_values)
    : layout_(std::move(layout)), agent_(agent), block_values_(std::move(block_values)) {
  layout_.require_valid_block(agent_);
  if (block_values_.size() != static_cast<std::size_t>(layout_.block_dim(agent_))) {
    throw LayoutError("direction block size does not match layout block " +
                      std::to_string(agent_));
  }
}

BlockVector PerturbationDirection::as_full_vector() const {
  BlockVector full(layout_);
  auto dst = full.block(agent_);
  for (std::size_t j = 0; j < block_values_.size(); ++j) {
    dst[j] = block_values_[j];
  }
  return full;
}

double PerturbationDirection::squared_norm() const {
  return std::inner_product(block_values_.begin(), block_values_.end(), block_values_.begin(),
                            0.0);
}

BlockVector axpy_block(const BlockVector& x, double scale, const PerturbationDirection& u) {
  if (!(x.layout() == u.layout())) {
    throw LayoutError("axpy_block: vector and direction layouts differ");
  }
  BlockVector out = x;
  auto dst = out.block(u.agent());
  auto src = u.block_values();
  for (std::size_t j = 0; j < src.size(); ++j) {
    dst[j] += scale * src[j];
  }
  return out;
}

}  // namespace azo
