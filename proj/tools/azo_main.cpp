// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: `run` executes a multi-trial experiment from a
// config file, `verify` runs the property-check suite, and `schedule`
// prints the tuned step-size/smoothing pair for a given horizon.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "azo/experiment.hpp"
#include "azo/numeric_io.hpp"
#include "azo/verification.hpp"

namespace {

int command_run(const std::string& config_path, std::uint64_t* seed_override,
                int* jobs_override, std::string* out_override,
                std::uint64_t* record_every_override) {
  const azo::ConfigFile file = azo::ConfigFile::parse_file(config_path);
  azo::ExperimentConfig config = azo::parse_experiment_config(file);
  if (seed_override) config.seed = *seed_override;
  if (jobs_override) config.jobs = *jobs_override;
  if (out_override) config.output = *out_override;
  if (record_every_override) config.record_every = *record_every_override;

  const azo::ExperimentSummary summary = azo::run_experiment(config);
  for (const auto& series : summary.series) {
    std::cout << series.label << ": " << series.completed << " trials completed, "
              << series.diverged << " diverged";
    if (!series.grid.empty()) {
      std::cout << "; final mean loss " << azo::format_double(series.mean_loss.back())
                << " (std " << azo::format_double(series.std_loss.back()) << ") at "
                << series.grid.back() << " queries";
    }
    std::cout << "\n";
  }
  std::cout << "traces and summary written to " << summary.output_dir.string() << "\n";
  return 0;
}

int command_verify(const std::string& selector, std::uint64_t seed, double l1_scale,
                   const std::string& out_dir) {
  azo::VerificationOptions options;
  options.seed = seed;
  options.l1_scale = l1_scale;
  const auto check = azo::parse_verification_check(selector);
  const azo::VerificationReport report = azo::run_verification_suite(check, options);
  std::cout << report.text;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream out(std::filesystem::path(out_dir) / "report.txt");
    out << report.text;
  }
  return report.passed() ? 0 : 1;
}

int command_schedule(double l0, int n_bar, double p_min, std::uint64_t horizon,
                     const std::string& variant_name) {
  azo::TunedVariant variant = azo::TunedVariant::dimension_in_mu;
  if (variant_name == "dimension-in-alpha") {
    variant = azo::TunedVariant::dimension_in_alpha;
  } else if (variant_name != "dimension-in-mu") {
    throw azo::ConfigError("--variant must be dimension-in-mu or dimension-in-alpha");
  }
  const auto pair = azo::tuned_schedule(l0, n_bar, p_min, horizon, variant);
  std::cout << "alpha = " << azo::format_double(pair.alpha) << "\n";
  std::cout << "mu = " << azo::format_double(pair.mu) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asynchronous zeroth-order optimization simulator"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run a multi-trial experiment from a config file");
  std::string config_path;
  run->add_option("--config", config_path, "Experiment config file")->required();
  std::uint64_t seed_override = 0;
  auto* seed_opt = run->add_option("--seed", seed_override, "Override the config seed");
  int jobs_override = 1;
  auto* jobs_opt = run->add_option("--jobs", jobs_override, "Parallel trial workers");
  std::string out_override;
  auto* out_opt = run->add_option("--out", out_override, "Override the output directory");
  std::uint64_t record_override = 0;
  auto* record_opt =
      run->add_option("--record-every", record_override, "Override the record cadence");

  // verify
  auto* verify = app.add_subcommand("verify", "Run the property-check suite");
  std::string selector = "all";
  verify->add_option("check", selector,
                     "smoothing-error | unbiasedness | recursion-bound | moments | all");
  std::uint64_t verify_seed = 20240708;
  verify->add_option("--seed", verify_seed, "Seed for the checks");
  double l1_scale = 1.0;
  verify->add_option("--l1-scale", l1_scale,
                     "Scale the smoothness constant (values < 1 corrupt the bounds on purpose)");
  std::string verify_out;
  verify->add_option("--out", verify_out, "Directory for report.txt");

  // schedule
  auto* schedule = app.add_subcommand("schedule", "Print the tuned (alpha, mu) pair");
  double l0 = 0.0;
  schedule->add_option("--l0", l0, "Lipschitz constant")->required();
  int n_bar = 1;
  schedule->add_option("--n-bar", n_bar, "Common block dimension")->required();
  double p_min = 0.0;
  schedule->add_option("--p-min", p_min, "Smallest activation probability")->required();
  std::uint64_t horizon = 0;
  schedule->add_option("--t", horizon, "Iteration horizon")->required();
  std::string variant = "dimension-in-mu";
  schedule->add_option("--variant", variant, "dimension-in-mu | dimension-in-alpha");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return command_run(config_path, seed_opt->count() ? &seed_override : nullptr,
                         jobs_opt->count() ? &jobs_override : nullptr,
                         out_opt->count() ? &out_override : nullptr,
                         record_opt->count() ? &record_override : nullptr);
    }
    if (verify->parsed()) {
      return command_verify(selector, verify_seed, l1_scale, verify_out);
    }
    if (schedule->parsed()) {
      return command_schedule(l0, n_bar, p_min, horizon, variant);
    }
  } catch (const azo::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "unexpected error: " << err.what() << "\n";
    return 3;
  }
  return 0;
}
