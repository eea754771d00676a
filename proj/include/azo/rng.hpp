// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace azo {

// Deterministic random stream identified by (seed, stream_id).
//
// The engine is std::mt19937_64, whose output sequence is pinned by the
// standard, and all distributions are generated in-house, so a given
// (seed, stream_id) pair replays bit-identically across runs and platforms.
// Distinct stream_ids are decorrelated through a SplitMix64 seeding stage.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Raw 64 random bits.
  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01();

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform01_open_below();

  // Standard normal via Box-Muller; the paired draw is cached.
  double normal();

  // Exponential waiting time with the given rate (> 0).
  double exponential(double rate);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stable (seed, index) -> seed mixing for deriving per-trial master seeds.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index);

// Fixed stream roles so every component draws from its own substream of a
// trial's master seed. Trials get distinct master seeds via derive_seed.
namespace streams {
inline constexpr std::uint64_t kScheduler = 1;
inline constexpr std::uint64_t kNoise = 2;
inline constexpr std::uint64_t kInitialPoint = 3;
inline constexpr std::uint64_t kDataset = 4;
inline constexpr std::uint64_t kVerification = 5;
inline constexpr std::uint64_t kAgentBase = 1000;
}  // namespace streams

}  // namespace azo
