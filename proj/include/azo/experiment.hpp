// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "azo/config_file.hpp"
#include "azo/scheduler.hpp"

namespace azo {

struct ObjectiveSpec {
  enum class Kind { benchmark, quadratic };
  Kind kind = Kind::benchmark;
  // benchmark
  int agents = 5;
  int samples = 20;
  int input_dim = 10;
  // quadratic: either a file or a generated instance over block_dims
  std::filesystem::path file;  // empty -> generate
  std::vector<int> block_dims = {2, 2};
  // optional evaluation noise
  std::optional<NoiseSpec> noise;
};

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::residual_async;
  TwoPointBaseline baseline = TwoPointBaseline::fresh_query;
  std::string label = "residual-async";
};

struct ExperimentConfig {
  ObjectiveSpec objective;
  std::vector<EstimatorSpec> estimators;
  ActivationModel::Kind activation_kind = ActivationModel::Kind::categorical;
  std::vector<double> activation_weights;  // empty -> uniform probabilities
  Budget budget = Budget::queries(10000);
  ScheduleSpec schedule = ManualSchedule::uniform(0.5, 0.1);
  int trials = 10;
  std::uint64_t seed = 12345;
  std::filesystem::path output = "out";
  std::uint64_t record_every = 100;
  bool record_grad_norm = false;
  bool export_dataset = false;
  int jobs = 1;
};

// Reads and validates an experiment description; rejects unknown keys.
ExperimentConfig parse_experiment_config(const ConfigFile& file);

// List of recognized config keys (documented in the README and used by the
// parser's unknown-key check).
std::vector<std::string> experiment_config_keys();

struct TrialOutcome {
  std::uint32_t trial = 0;
  bool diverged = false;
  std::string divergence_detail;
  std::uint64_t iterations = 0;
  std::uint64_t queries = 0;
  std::vector<TraceRow> rows;
  double final_loss = 0.0;  // loss at the last recorded grid point
};

struct EstimatorSeries {
  std::string label;
  std::vector<TrialOutcome> trials;
  // Aligned per-grid-point statistics over completed (non-diverged) trials.
  std::vector<std::uint64_t> grid;
  std::vector<double> mean_loss;
  std::vector<double> std_loss;
  int completed = 0;
  int diverged = 0;
};

struct ExperimentSummary {
  std::vector<EstimatorSeries> series;
  std::filesystem::path output_dir;
  std::filesystem::path summary_path;
  std::filesystem::path report_path;
};

// Runs every estimator over every trial (sharing the trial's dataset,
// initial point and activation sequence), writes one trace CSV per
// (estimator, trial), a cross-trial summary.csv and a report.txt, and
// returns the aggregated series. Outputs are byte-stable for a fixed
// config and seed.
ExperimentSummary run_experiment(const ExperimentConfig& config);

inline constexpr const char* kTraceHeader = "trial,estimator,queries,iteration,agent,loss,grad_norm_sq";

}  // namespace azo
