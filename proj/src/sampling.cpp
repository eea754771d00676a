// SPDX-License-Identifier: Apache-2.0
#include "azo/sampling.hpp"

#include <cmath>
#include <string>

namespace azo {

PerturbationDirection sample_block_gaussian(const BlockLayout& layout, int agent,
                                            RngStream& rng) {
  layout.require_valid_block(agent);
  std::vector<double> block(static_cast<std::size_t>(layout.block_dim(agent)));
  for (double& v : block) {
    v = rng.normal();
  }
  return PerturbationDirection(layout, agent, std::move(block));
}

std::vector<double> sample_standard_gaussian(std::size_t dim, RngStream& rng) {
  std::vector<double> values(dim);
  for (double& v : values) {
    v = rng.normal();
  }
  return values;
}

int sample_categorical(std::span<const double> probs, RngStream& rng) {
  if (probs.empty()) {
    throw ConfigError("categorical distribution needs at least one outcome");
  }
  double total = 0.0;
  for (double p : probs) {
    if (p < 0.0 || !std::isfinite(p)) {
      throw ConfigError("categorical probability must be finite and non-negative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ConfigError("categorical probabilities sum to " + std::to_string(total) +
                      ", expected 1 within 1e-12");
  }
  const double u = rng.uniform01();
  double cumulative = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cumulative += probs[i];
    if (u < cumulative) {
      return static_cast<int>(i);
    }
    last_positive = static_cast<int>(i);
  }
  // u landed in the rounding gap below 1; return the last outcome with mass.
  return last_positive;
}

}  // namespace azo
