// SPDX-License-Identifier: Apache-2.0
#include "azo/experiment.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "azo/analysis.hpp"
#include "azo/feature_learning.hpp"
#include "azo/numeric_io.hpp"

namespace azo {
namespace {

EstimatorSpec parse_estimator_name(const std::string& name, TwoPointBaseline baseline) {
  if (name == "residual-async") {
    return {EstimatorKind::residual_async, TwoPointBaseline::fresh_query, name};
  }
  if (name == "two-point-async") {
    return {EstimatorKind::two_point_async, baseline, name};
  }
  throw ConfigError("unknown estimator '" + name +
                    "' (supported: residual-async, two-point-async)");
}

QuadraticObjective load_quadratic_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("objective.file: cannot open " + path.string());
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    std::vector<double> row;
    for (const auto& field : split_csv_line(content)) {
      row.push_back(parse_double(field));
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 4) {
    throw ConfigError("objective.file: expected block dims, matrix rows, linear row, constant");
  }
  std::vector<int> dims;
  for (double d : rows.front()) {
    dims.push_back(static_cast<int>(d));
  }
  BlockLayout layout(dims);
  const auto n = static_cast<Eigen::Index>(layout.total_dim());
  if (rows.size() != static_cast<std::size_t>(n) + 3) {
    throw ConfigError("objective.file: expected " + std::to_string(n) + " matrix rows");
  }
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r) + 1];
    if (row.size() != static_cast<std::size_t>(n)) {
      throw ConfigError("objective.file: matrix row has wrong width");
    }
    for (Eigen::Index c = 0; c < n; ++c) {
      a(r, c) = row[static_cast<std::size_t>(c)];
    }
  }
  const auto& brow = rows[static_cast<std::size_t>(n) + 1];
  if (brow.size() != static_cast<std::size_t>(n)) {
    throw ConfigError("objective.file: linear row has wrong width");
  }
  Eigen::VectorXd b(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    b(c) = brow[static_cast<std::size_t>(c)];
  }
  return QuadraticObjective(layout, std::move(a), std::move(b), rows.back().at(0));
}

struct BuiltObjective {
  ObjectiveHandle handle;
  std::shared_ptr<const Objective> keep_alive;
};

BuiltObjective build_objective(const ObjectiveSpec& spec, std::uint64_t trial_seed) {
  if (spec.kind == ObjectiveSpec::Kind::benchmark) {
    RngStream dataset_rng(trial_seed, streams::kDataset);
    auto fn = std::make_shared<FeatureLearningObjective>(
        make_benchmark(spec.agents, spec.samples, spec.input_dim, dataset_rng));
    ObjectiveMetadata meta = fn->metadata();
    return {ObjectiveHandle(fn, meta, spec.noise, RngStream(trial_seed, streams::kNoise)), fn};
  }
  std::shared_ptr<const QuadraticObjective> fn;
  if (!spec.file.empty()) {
    fn = std::make_shared<QuadraticObjective>(load_quadratic_file(spec.file));
  } else {
    RngStream dataset_rng(trial_seed, streams::kDataset);
    fn = std::make_shared<QuadraticObjective>(
        random_quadratic(BlockLayout(spec.block_dims), dataset_rng));
  }
  ObjectiveMetadata meta = fn->metadata();
  return {ObjectiveHandle(fn, meta, spec.noise, RngStream(trial_seed, streams::kNoise)), fn};
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

void write_trace_file(const std::filesystem::path& path, const std::string& label,
                      const TrialOutcome& outcome) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot write trace file " + path.string());
  }
  out << kTraceHeader << "\n";
  for (const auto& row : outcome.rows) {
    out << row.trial << "," << label << "," << row.queries << "," << row.iteration << ","
        << row.agent << "," << format_double(row.loss) << ","
        << format_optional(row.grad_norm_sq) << "\n";
  }
  if (outcome.diverged) {
    out << "# status: diverged (" << outcome.divergence_detail << ")\n";
  }
}

}  // namespace

std::vector<std::string> experiment_config_keys() {
  return {
      "objective.kind",      "objective.agents",     "objective.samples",
      "objective.input-dim", "objective.file",       "objective.block-dims",
      "objective.noise",     "objective.noise-variance",
      "estimators",          "two-point.baseline",
      "activation.kind",     "activation.probs",     "activation.rates",
      "budget.queries",      "budget.iterations",
      "schedule.kind",       "schedule.alpha",       "schedule.mu",
      "schedule.variant",
      "trials",              "seed",                 "record-every",
      "record.grad-norm",    "dataset.export",       "output",
      "jobs",
  };
}

ExperimentConfig parse_experiment_config(const ConfigFile& file) {
  ExperimentConfig config;

  const std::string objective_kind = file.get_string("objective.kind", "benchmark");
  if (objective_kind == "benchmark") {
    config.objective.kind = ObjectiveSpec::Kind::benchmark;
  } else if (objective_kind == "quadratic") {
    config.objective.kind = ObjectiveSpec::Kind::quadratic;
  } else {
    throw ConfigError("objective.kind must be 'benchmark' or 'quadratic', got '" +
                      objective_kind + "'");
  }
  config.objective.agents = static_cast<int>(file.get_int("objective.agents", 5));
  config.objective.samples = static_cast<int>(file.get_int("objective.samples", 20));
  config.objective.input_dim = static_cast<int>(file.get_int("objective.input-dim", 10));
  config.objective.file = file.get_string("objective.file", "");
  if (const auto dims = file.get_int_list("objective.block-dims"); !dims.empty()) {
    config.objective.block_dims = dims;
  }
  if (config.objective.kind == ObjectiveSpec::Kind::quadratic &&
      !config.objective.file.empty() && !std::filesystem::exists(config.objective.file)) {
    throw ConfigError("objective.file: no such file " + config.objective.file.string());
  }
  const std::string noise_kind = file.get_string("objective.noise", "none");
  if (noise_kind != "none") {
    NoiseSpec noise;
    if (noise_kind == "uniform") {
      noise.kind = NoiseSpec::Kind::additive_uniform;
    } else if (noise_kind == "gaussian") {
      noise.kind = NoiseSpec::Kind::additive_gaussian_truncated;
    } else {
      throw ConfigError("objective.noise must be 'none', 'uniform' or 'gaussian'");
    }
    noise.variance_bound = file.get_double("objective.noise-variance", 0.0);
    config.objective.noise = noise;
  } else {
    file.get_double("objective.noise-variance", 0.0);  // consume if present
  }

  TwoPointBaseline baseline = TwoPointBaseline::fresh_query;
  const std::string baseline_name = file.get_string("two-point.baseline", "fresh");
  if (baseline_name == "stored") {
    baseline = TwoPointBaseline::stored_value;
  } else if (baseline_name != "fresh") {
    throw ConfigError("two-point.baseline must be 'fresh' or 'stored'");
  }

  config.estimators.clear();
  auto names = file.get_string_list("estimators");
  if (names.empty()) {
    names = {"residual-async", "two-point-async"};
  }
  for (const auto& name : names) {
    config.estimators.push_back(parse_estimator_name(name, baseline));
  }

  const std::string activation_kind = file.get_string("activation.kind", "categorical");
  if (activation_kind == "categorical") {
    config.activation_kind = ActivationModel::Kind::categorical;
    config.activation_weights = file.get_double_list("activation.probs");
    file.get_double_list("activation.rates");
  } else if (activation_kind == "clocks") {
    config.activation_kind = ActivationModel::Kind::exponential_clocks;
    config.activation_weights = file.get_double_list("activation.rates");
    file.get_double_list("activation.probs");
  } else {
    throw ConfigError("activation.kind must be 'categorical' or 'clocks'");
  }

  const bool has_queries = file.has("budget.queries");
  const bool has_iterations = file.has("budget.iterations");
  if (has_queries && has_iterations) {
    throw ConfigError("set exactly one of budget.queries and budget.iterations");
  }
  if (has_iterations) {
    config.budget = Budget::iterations(file.get_u64("budget.iterations", 0));
  } else {
    config.budget = Budget::queries(file.get_u64("budget.queries", 10000));
  }

  const std::string schedule_kind = file.get_string("schedule.kind", "manual");
  if (schedule_kind == "manual") {
    ManualSchedule manual;
    auto alphas = file.get_double_list("schedule.alpha");
    auto mus = file.get_double_list("schedule.mu");
    manual.step_sizes = alphas.empty() ? std::vector<double>{0.5} : alphas;
    manual.smoothings = mus.empty() ? std::vector<double>{0.1} : mus;
    config.schedule = manual;
    file.get_string("schedule.variant", "");
  } else if (schedule_kind == "tuned") {
    TunedSchedule tuned;
    const std::string variant = file.get_string("schedule.variant", "dimension-in-mu");
    if (variant == "dimension-in-mu") {
      tuned.variant = TunedVariant::dimension_in_mu;
    } else if (variant == "dimension-in-alpha") {
      tuned.variant = TunedVariant::dimension_in_alpha;
    } else {
      throw ConfigError("schedule.variant must be 'dimension-in-mu' or 'dimension-in-alpha'");
    }
    config.schedule = tuned;
    file.get_double_list("schedule.alpha");
    file.get_double_list("schedule.mu");
  } else {
    throw ConfigError("schedule.kind must be 'manual' or 'tuned'");
  }

  config.trials = static_cast<int>(file.get_int("trials", 10));
  if (config.trials < 1) {
    throw ConfigError("trials must be >= 1");
  }
  config.seed = file.get_u64("seed", 12345);
  config.record_every = file.get_u64("record-every", 100);
  if (config.record_every < 1) {
    throw ConfigError("record-every must be >= 1");
  }
  config.record_grad_norm = file.get_bool("record.grad-norm", false);
  config.export_dataset = file.get_bool("dataset.export", false);
  config.output = file.get_string("output", "out");
  config.jobs = static_cast<int>(file.get_int("jobs", 1));
  if (config.jobs < 1) {
    throw ConfigError("jobs must be >= 1");
  }

  file.require_all_consumed();
  return config;
}

namespace {

ActivationModel build_activation_model(const ExperimentConfig& config, int num_agents) {
  std::vector<double> weights = config.activation_weights;
  if (weights.empty()) {
    if (config.activation_kind == ActivationModel::Kind::categorical) {
      return ActivationModel::uniform(num_agents);
    }
    weights.assign(static_cast<std::size_t>(num_agents), 1.0);
  }
  if (weights.size() != static_cast<std::size_t>(num_agents)) {
    throw ConfigError("activation weights need one entry per agent (" +
                      std::to_string(num_agents) + ")");
  }
  if (config.activation_kind == ActivationModel::Kind::categorical) {
    return ActivationModel::categorical(weights);
  }
  return ActivationModel::exponential_clocks(weights);
}

TrialOutcome run_one_trial(const ExperimentConfig& config, const EstimatorSpec& estimator,
                           std::uint32_t trial, bool export_dataset) {
  const std::uint64_t trial_seed = derive_seed(config.seed, trial);
  BuiltObjective built = build_objective(config.objective, trial_seed);
  auto& obj = built.handle;

  if (export_dataset) {
    if (const auto* fn =
            dynamic_cast<const FeatureLearningObjective*>(&obj.function())) {
      save_dataset_csv(*fn, config.output / ("dataset_" + std::to_string(trial)));
    }
  }

  // The tuned schedule needs a Lipschitz constant; quadratics do not carry a
  // global one, so fall back to a sampled estimate flagged as empirical.
  if (std::holds_alternative<TunedSchedule>(config.schedule) && !obj.metadata().lipschitz_l0) {
    if (const auto* fn = dynamic_cast<const DifferentiableObjective*>(&obj.function())) {
      RngStream cloud_rng(trial_seed, streams::kVerification);
      const auto constants = estimate_constants(*fn, 64, 3.0, cloud_rng);
      obj.metadata().lipschitz_l0 = constants.l0;
      obj.metadata().provenance = ConstantProvenance::empirical;
    }
  }

  const ActivationModel model = build_activation_model(config, obj.layout().num_blocks());

  RngStream init_rng(trial_seed, streams::kInitialPoint);
  BlockVector x0(obj.layout(), sample_standard_gaussian(obj.layout().total_dim(), init_rng));

  RunConfig run;
  run.budget = config.budget;
  run.estimator = estimator.kind;
  run.two_point_baseline = estimator.baseline;
  run.schedule = config.schedule;
  run.seed = trial_seed;
  run.trial_id = trial;
  run.record_every = config.record_every;
  run.record_grad_norm = config.record_grad_norm;

  TrialOutcome outcome;
  outcome.trial = trial;
  const Recorder recorder = [&outcome](const TraceRow& row) { outcome.rows.push_back(row); };
  const RunResult result = run_algorithm(obj, x0, model, run, recorder);
  outcome.diverged = result.diverged;
  outcome.divergence_detail = result.divergence_detail;
  outcome.iterations = result.clock.iteration;
  outcome.queries = result.clock.queries;
  outcome.final_loss = outcome.rows.empty() ? obj.probe(result.x) : outcome.rows.back().loss;
  return outcome;
}

void aggregate_series(EstimatorSeries& series) {
  series.completed = 0;
  series.diverged = 0;
  std::size_t min_rows = std::numeric_limits<std::size_t>::max();
  for (const auto& outcome : series.trials) {
    if (outcome.diverged) {
      series.diverged += 1;
      continue;
    }
    series.completed += 1;
    min_rows = std::min(min_rows, outcome.rows.size());
  }
  if (series.completed == 0 || min_rows == std::numeric_limits<std::size_t>::max()) {
    return;
  }
  for (std::size_t g = 0; g < min_rows; ++g) {
    double mean = 0.0;
    int n = 0;
    std::uint64_t grid_queries = 0;
    for (const auto& outcome : series.trials) {
      if (outcome.diverged) continue;
      mean += outcome.rows[g].loss;
      grid_queries = outcome.rows[g].queries;
      n += 1;
    }
    mean /= static_cast<double>(n);
    double variance = 0.0;
    for (const auto& outcome : series.trials) {
      if (outcome.diverged) continue;
      const double d = outcome.rows[g].loss - mean;
      variance += d * d;
    }
    variance = n > 1 ? variance / static_cast<double>(n - 1) : 0.0;
    series.grid.push_back(grid_queries);
    series.mean_loss.push_back(mean);
    series.std_loss.push_back(std::sqrt(variance));
  }
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  std::filesystem::create_directories(config.output);

  ExperimentSummary summary;
  summary.output_dir = config.output;
  summary.series.resize(config.estimators.size());

  struct Task {
    std::size_t series_index;
    std::uint32_t trial;
  };
  std::vector<Task> tasks;
  for (std::size_t e = 0; e < config.estimators.size(); ++e) {
    summary.series[e].label = config.estimators[e].label;
    summary.series[e].trials.resize(static_cast<std::size_t>(config.trials));
    for (int t = 0; t < config.trials; ++t) {
      tasks.push_back({e, static_cast<std::uint32_t>(t)});
    }
  }

  std::atomic<std::size_t> next_task{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const auto worker = [&]() {
    while (true) {
      const std::size_t index = next_task.fetch_add(1);
      if (index >= tasks.size()) break;
      const Task task = tasks[index];
      try {
        summary.series[task.series_index].trials[task.trial] =
            run_one_trial(config, config.estimators[task.series_index], task.trial,
                          config.export_dataset && task.series_index == 0);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int thread_count = std::min<int>(config.jobs, static_cast<int>(tasks.size()));
  if (thread_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(thread_count));
    for (int i = 0; i < thread_count; ++i) {
      pool.emplace_back(worker);
    }
    for (auto& thread : pool) {
      thread.join();
    }
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }

  // Deterministic output: traces in (estimator, trial) order, then summary.
  for (auto& series : summary.series) {
    for (const auto& outcome : series.trials) {
      const auto path = config.output / ("trace_" + series.label + "_" +
                                         std::to_string(outcome.trial) + ".csv");
      write_trace_file(path, series.label, outcome);
    }
    aggregate_series(series);
  }

  summary.summary_path = config.output / "summary.csv";
  {
    std::ofstream out(summary.summary_path);
    out << "estimator,queries,mean_loss,std_loss,trials\n";
    for (const auto& series : summary.series) {
      for (std::size_t g = 0; g < series.grid.size(); ++g) {
        out << series.label << "," << series.grid[g] << ","
            << format_double(series.mean_loss[g]) << "," << format_double(series.std_loss[g])
            << "," << series.completed << "\n";
      }
    }
  }

  summary.report_path = config.output / "report.txt";
  {
    std::ofstream out(summary.report_path);
    out << "seed = " << config.seed << "\n";
    out << "trials = " << config.trials << "\n";
    out << "record_every = " << config.record_every << "\n";
    out << "budget = " << (config.budget.kind == Budget::Kind::queries ? "queries" : "iterations")
        << ":" << config.budget.limit << "\n";
    for (const auto& series : summary.series) {
      const std::string prefix = "estimator." + series.label;
      out << prefix << ".completed = " << series.completed << "\n";
      out << prefix << ".diverged = " << series.diverged << "\n";
      if (!series.grid.empty()) {
        out << prefix << ".final_queries = " << series.grid.back() << "\n";
        out << prefix << ".final_mean_loss = " << format_double(series.mean_loss.back()) << "\n";
        out << prefix << ".final_std_loss = " << format_double(series.std_loss.back()) << "\n";
      }
      for (const auto& outcome : series.trials) {
        if (outcome.diverged) {
          out << prefix << ".trial_" << outcome.trial << ".diverged = 1\n";
        }
      }
    }
  }
  return summary;
}

}  // namespace azo
