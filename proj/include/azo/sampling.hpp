// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "azo/block_vector.hpp"
#include "azo/rng.hpp"

namespace azo {

// Standard normal direction restricted to one agent's block; all other
// coordinates are implicitly zero.
PerturbationDirection sample_block_gaussian(const BlockLayout& layout, int agent, RngStream& rng);

// Dense standard normal vector of the layout's full dimension.
std::vector<double> sample_standard_gaussian(std::size_t dim, RngStream& rng);

// Draws an index with the given probabilities. Probabilities must be
// non-negative and sum to 1 within 1e-12.
int sample_categorical(std::span<const double> probs, RngStream& rng);

}  // namespace azo
