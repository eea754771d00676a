// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace azo {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Block-structure mismatch: wrong agent index, incompatible layouts, bad dimensions.
class LayoutError : public Error {
 public:
  explicit LayoutError(const std::string& what) : Error(what) {}
};

// Invalid user-supplied configuration (probabilities, schedules, config files).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// Parameters outside a formula's admissible domain.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what) {}
};

// An objective query returned a non-finite value. Carries the offending point.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, std::vector<double> point)
      : Error(what), point_(std::move(point)) {}

  const std::vector<double>& point() const { return point_; }

 private:
  std::vector<double> point_;
};

// A gradient estimate exceeded the magnitude guard; the run must abort.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::uint64_t iteration, int agent, double norm)
      : Error(what), iteration_(iteration), agent_(agent), norm_(norm) {}

  std::uint64_t iteration() const { return iteration_; }
  int agent() const { return agent_; }
  double norm() const { return norm_; }

 private:
  std::uint64_t iteration_;
  int agent_;
  double norm_;
};

}  // namespace azo
