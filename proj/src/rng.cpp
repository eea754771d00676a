// SPDX-License-Identifier: Apache-2.0
#include "azo/rng.hpp"

#include <cmath>
#include <numbers>

namespace azo {
namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t state = seed ^ (stream_id * 0xda942042e4dd58b5ULL);
  // Burn a few SplitMix64 outputs so nearby (seed, stream_id) pairs decohere.
  splitmix64(state);
  const std::uint64_t engine_seed = splitmix64(state);
  engine_.seed(engine_seed);
}

double RngStream::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform01_open_below() {
  return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform01_open_below();
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double RngStream::exponential(double rate) {
  return -std::log(uniform01_open_below()) / rate;
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
  std::uint64_t state = master_seed ^ (index * 0x9e3779b97f4a7c15ULL);
  splitmix64(state);
  return splitmix64(state);
}

}  // namespace azo
