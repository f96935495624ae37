/*
 Copyright 2026 The lqmhpe Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

// Command-line front end.
//
//   lqmhpe run [--config FILE] [--model M] [--scheme S ...] [--trials N]
//              [--seed S] [--jobs J] [--out DIR] [--horizon-n N]
//              [--horizon-m M] [--trace] [--no-timing]
//   lqmhpe validate [--quick] [--seed S]
//
// Exit codes: 0 success, 1 configuration error, 2 validation failure.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lqmhpe/config.hpp"
#include "lqmhpe/monte_carlo.hpp"
#include "lqmhpe/report.hpp"
#include "lqmhpe/validate.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitValidation = 2;
constexpr const char* kOutDirEnv = "LQMHPE_OUT_DIR";

struct RunOptions {
  std::string config_path;
  std::optional<std::string> model;
  std::vector<std::string> schemes;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
  std::optional<int> horizon_n;
  std::optional<int> horizon_m;
  bool trace = false;
  bool no_timing = false;
};

struct ValidateOptions {
  bool quick = false;
  std::uint64_t seed = lqmhpe::ValidationOptions{}.seed;
  bool corrupt_input_matrix = false;
};

std::string default_out_dir() {
  const char* env = std::getenv(kOutDirEnv);
  return (env != nullptr && *env != '\0') ? env : "results";
}

lqmhpe::BatteryConfig resolve(const RunOptions& opt) {
  using lqmhpe::ConfigError;
  lqmhpe::BatteryConfig cfg;
  if (!opt.config_path.empty()) {
    cfg = lqmhpe::load_config(opt.config_path);
    if (opt.model && *opt.model != cfg.base.model) {
      throw ConfigError("trial.model", "--model " + *opt.model + " conflicts with " +
                                           opt.config_path + " (model " + cfg.base.model + ")");
    }
  } else {
    const std::string model = opt.model.value_or("crazyflie");
    try {
      cfg.base = lqmhpe::TrialConfig::for_model(model);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("trial.model", e.what());
    }
  }
  if (!opt.schemes.empty()) {
    cfg.schemes.clear();
    for (const std::string& s : opt.schemes) {
      if (s == "all") {
        cfg.schemes = {lqmhpe::Scheme::kNone, lqmhpe::Scheme::kLqMhpe, lqmhpe::Scheme::kNmhpe};
        break;
      }
      try {
        cfg.schemes.push_back(lqmhpe::parse_scheme(s));
      } catch (const std::invalid_argument& e) {
        throw ConfigError("battery.schemes", e.what());
      }
    }
  }
  if (opt.trials) cfg.trials = *opt.trials;
  if (opt.seed) cfg.first_seed = *opt.seed;
  if (opt.jobs) cfg.jobs = *opt.jobs;
  if (opt.horizon_n) cfg.base.horizon_n = *opt.horizon_n;
  if (opt.horizon_m) cfg.base.horizon_m = *opt.horizon_m;
  if (opt.trace) cfg.base.record_trace = true;
  if (opt.no_timing) cfg.base.record_timing = false;
  if (cfg.trials < 1) throw ConfigError("battery.trials", "--trials must be >= 1");
  if (cfg.jobs < 1) throw ConfigError("battery.jobs", "--jobs must be >= 1");
  try {
    cfg.base.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("", e.what());
  }
  return cfg;
}

void print_summary(const lqmhpe::BatteryResult& result) {
  std::printf("%-8s %6s %9s %9s %14s %14s %14s %12s %12s\n", "scheme", "trials", "diverged",
              "|p|<1m", "cost best", "cost mean", "cost worst", "est mean[s]", "plan mean[s]");
  for (const lqmhpe::SchemeSummary& s : result.summaries) {
    std::printf("%-8s %6d %9d %9d %14.6g %14.6g %14.6g %12.4g %12.4g\n",
                lqmhpe::to_string(s.scheme).c_str(), s.trials, s.diverged, s.converged,
                s.cost_best, s.cost_mean, s.cost_worst, s.estimator_mean, s.planner_mean);
  }
}

int run(const RunOptions& opt) {
  lqmhpe::BatteryConfig cfg;
  try {
    cfg = resolve(opt);
  } catch (const lqmhpe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  const std::string out = opt.out.value_or(default_out_dir());
  const lqmhpe::BatteryResult result = lqmhpe::run_battery(cfg);
  lqmhpe::write_outputs(result, out);
  print_summary(result);
  std::printf("wrote %s/records.csv and %s/summary.json\n", out.c_str(), out.c_str());
  return kExitOk;
}

int validate(const ValidateOptions& opt) {
  lqmhpe::ValidationOptions v;
  v.quick = opt.quick;
  v.seed = opt.seed;
  v.corrupt_input_matrix = opt.corrupt_input_matrix;
  bool all_passed = true;
  for (const lqmhpe::CheckResult& r : lqmhpe::run_validation(v)) {
    std::printf("%s %-30s worst=%.3e threshold=%.1e n=%d %.2fs%s%s\n", r.passed ? "PASS" : "FAIL",
                r.name.c_str(), r.worst, r.threshold, r.samples, r.seconds,
                r.detail.empty() ? "" : " ", r.detail.c_str());
    all_passed = all_passed && r.passed;
  }
  return all_passed ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop Monte Carlo comparison of moving-horizon parameter estimators "
               "for multirotor model predictive control."};
  app.require_subcommand(1);

  RunOptions run_opt;
  CLI::App* run_cmd = app.add_subcommand("run", "Run a Monte Carlo battery and write results.");
  run_cmd->add_option("--config", run_opt.config_path, "Configuration file (TOML subset)")
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--model", run_opt.model, "crazyflie | fusion1 (default crazyflie)");
  run_cmd->add_option("--scheme", run_opt.schemes, "none | lq_mhpe | nmhpe | all (repeatable)")
      ->delimiter(',');
  run_cmd->add_option("--trials", run_opt.trials, "Trials per scheme (default 100)");
  run_cmd->add_option("--seed", run_opt.seed, "First trial seed (default 0)");
  run_cmd->add_option("--jobs", run_opt.jobs, "Worker threads (default 1)");
  run_cmd->add_option("--out", run_opt.out,
                      std::string("Output directory (default $") + kOutDirEnv + " or ./results)");
  run_cmd->add_option("--horizon-n", run_opt.horizon_n, "Planner horizon length");
  run_cmd->add_option("--horizon-m", run_opt.horizon_m, "Estimator window length");
  run_cmd->add_flag("--trace", run_opt.trace, "Write per-step traces/<scheme>/<seed>.csv");
  run_cmd->add_flag("--no-timing", run_opt.no_timing,
                    "Write zero timings so records.csv is bit-reproducible");
  run_cmd->footer(lqmhpe::csv_schema_help());

  ValidateOptions val_opt;
  CLI::App* val_cmd = app.add_subcommand("validate", "Run property checks against oracles.");
  val_cmd->add_flag("--quick", val_opt.quick, "Use one tenth of the samples");
  val_cmd->add_option("--seed", val_opt.seed, "Sampling seed");
  val_cmd->add_flag("--corrupt-input-matrix", val_opt.corrupt_input_matrix,
                    "Negative control: flip one input-matrix sign; checks must fail")
      ->group("Testing");

  app.footer("Exit codes: 0 success, 1 configuration error, 2 validation failure.");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (run_cmd->parsed()) return run(run_opt);
    return validate(val_opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
