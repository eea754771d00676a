// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

namespace azo {

// Selectable property checks:
//   smoothing_error  - value/gradient error of block Gaussian smoothing
//                      stays inside the analytic bounds
//   unbiasedness     - Monte-Carlo mean of the asynchronous residual
//                      estimator matches the smoothed block gradient
//   recursion_bound  - closed-form bounds dominate the extremal geometric
//                      recursion sequence
//   moments          - interleaved updates inflate the estimator's second
//                      moment; benchmark moments stay finite (diagnostic)
enum class VerificationCheck { smoothing_error, unbiasedness, recursion_bound, moments, all };

VerificationCheck parse_verification_check(const std::string& name);

struct VerificationOptions {
  std::uint64_t seed = 20240708;
  // Scales the smoothness constant fed to the smoothing-error check.
  // 1.0 verifies the real bounds; values < 1 corrupt them on purpose and
  // must make the check fail (negative control).
  double l1_scale = 1.0;
};

struct VerificationReport {
  std::string text;        // flat key = value blocks
  int hard_failures = 0;   // asserted violations; 0 means the suite passed
  bool passed() const { return hard_failures == 0; }
};

VerificationReport run_verification_suite(VerificationCheck check,
                                          const VerificationOptions& options = {});

}  // namespace azo
