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

#include "lqmhpe/report.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "lqmhpe/dynamics.hpp"

namespace lqmhpe {
namespace {

using nlohmann::ordered_json;

std::string channels_name(DisturbanceChannels channels) {
  return channels == DisturbanceChannels::kAll ? "all" : "translational_and_rates";
}

ordered_json trial_json(const TrialConfig& c) {
  ordered_json j;
  j["model"] = c.model;
  j["duration"] = c.duration;
  j["dt"] = c.dt;
  j["param_lower_factor"] = c.param_lower_factor;
  j["param_upper_factor"] = c.param_upper_factor;
  j["noise_bound"] = c.noise_bound;
  j["position_bound"] = c.position_bound;
  j["velocity_bound"] = c.velocity_bound;
  j["rate_bound"] = c.rate_bound;
  j["random_attitude"] = c.random_attitude;
  j["disturbance_channels"] = channels_name(c.disturbance_channels);
  j["horizon_n"] = c.horizon_n;
  j["position_weight"] = c.position_weight;
  j["attitude_weight"] = c.attitude_weight;
  j["velocity_weight"] = c.velocity_weight;
  j["rate_weight"] = c.rate_weight;
  j["terminal_factor"] = c.terminal_factor;
  j["input_weight"] = c.input_weight;
  j["nmpc_max_iter"] = c.nmpc_max_iter;
  j["nmpc_tolerance"] = c.nmpc_tolerance;
  j["horizon_m"] = c.horizon_m;
  j["disturbance_weight"] = c.disturbance_weight;
  j["include_quaternion_rows"] = c.include_quaternion_rows;
  j["divergence_cost"] = c.divergence_cost;
  j["divergence_state_bound"] = c.divergence_state_bound;
  j["record_timing"] = c.record_timing;
  j["record_trace"] = c.record_trace;
  return j;
}

ordered_json battery_json(const BatteryConfig& cfg) {
  ordered_json j;
  j["trial"] = trial_json(cfg.base);
  ordered_json schemes = ordered_json::array();
  for (Scheme s : cfg.schemes) schemes.push_back(to_string(s));
  j["schemes"] = schemes;
  j["trials"] = cfg.trials;
  j["first_seed"] = cfg.first_seed;
  j["jobs"] = cfg.jobs;
  return j;
}

void write_row(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) os << ',';
    os << cells[i];
  }
  os << '\n';
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> cols = {
      "seed",           "model",          "scheme",          "cost",
      "diverged",       "final_position_error", "steps",     "estimator_solves",
      "estimator_failures", "estimator_time_mean", "estimator_time_min", "estimator_time_max",
      "planner_fallbacks",  "planner_time_mean",   "planner_time_min",   "planner_time_max"};
  return cols;
}

const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c = {"t",  "px", "py", "pz", "qw", "qx", "qy", "qz",
                                  "vx", "vy", "vz", "wx", "wy", "wz"};
    for (int i = 0; i < kInputDim; ++i) c.push_back("u" + std::to_string(i + 1));
    for (int i = 0; i < kParamDim; ++i) c.push_back("vartheta" + std::to_string(i));
    c.insert(c.end(), {"stage_cost", "estimator_time", "planner_time"});
    return c;
  }();
  return cols;
}

std::string csv_schema_help() {
  std::ostringstream os;
  os << "records.csv (one row per trial):\n"
        "  seed                  trial seed; paired across schemes\n"
        "  model                 crazyflie | fusion1\n"
        "  scheme                none | lq_mhpe | nmhpe\n"
        "  cost                  realized closed-loop cost, capped at divergence_cost\n"
        "  diverged              1 if the state left divergence_state_bound or went non-finite\n"
        "  final_position_error  |p| at the end of the trial [m], inf if diverged\n"
        "  steps                 control steps simulated\n"
        "  estimator_solves      estimator calls (full window only)\n"
        "  estimator_failures    calls that fell back to the prior\n"
        "  estimator_time_*      per-solve wall time [s], 0 when timing is off\n"
        "  planner_fallbacks     steps whose planner solve did not converge\n"
        "  planner_time_*        per-step wall time [s], 0 when timing is off\n"
        "traces/<scheme>/<seed>.csv (with --trace):\n"
        "  t, state (px..wz), input u1..u4, relaxed estimate vartheta0..vartheta18,\n"
        "  stage_cost, estimator_time, planner_time\n";
  return os.str();
}

void write_records_csv(const std::vector<TrialRecord>& records, std::ostream& os) {
  write_row(os, record_columns());
  for (const TrialRecord& r : records) {
    write_row(os, {std::to_string(r.seed), r.model, to_string(r.scheme), format_double(r.cost),
                   r.diverged ? "1" : "0", format_double(r.final_position_error),
                   std::to_string(r.steps), std::to_string(r.estimator.count),
                   std::to_string(r.estimator_failures), format_double(r.estimator.mean),
                   format_double(r.estimator.min), format_double(r.estimator.max),
                   std::to_string(r.planner_fallbacks), format_double(r.planner.mean),
                   format_double(r.planner.min), format_double(r.planner.max)});
  }
}

void write_trace_csv(const TrialRecord& record, std::ostream& os) {
  write_row(os, trace_columns());
  std::vector<std::string> cells;
  for (const TraceRow& row : record.trace) {
    cells.clear();
    cells.push_back(format_double(row.time));
    for (int i = 0; i < kStateDim; ++i) cells.push_back(format_double(row.state[i]));
    for (int i = 0; i < kInputDim; ++i) cells.push_back(format_double(row.input[i]));
    for (int i = 0; i < kParamDim; ++i) cells.push_back(format_double(row.estimate[i]));
    cells.push_back(format_double(row.stage_cost));
    cells.push_back(format_double(row.estimator_time));
    cells.push_back(format_double(row.planner_time));
    write_row(os, cells);
  }
}

std::string config_json(const BatteryConfig& cfg) { return battery_json(cfg).dump(2); }

std::string summary_json(const BatteryResult& result) {
  ordered_json j;
  j["config"] = battery_json(result.config);
  ordered_json schemes = ordered_json::array();
  for (const SchemeSummary& s : result.summaries) {
    ordered_json e;
    e["scheme"] = to_string(s.scheme);
    e["trials"] = s.trials;
    e["diverged"] = s.diverged;
    e["converged"] = s.converged;
    e["cost"] = {{"best", s.cost_best}, {"mean", s.cost_mean}, {"worst", s.cost_worst}};
    e["estimator_time"] = {
        {"best", s.estimator_best}, {"mean", s.estimator_mean}, {"worst", s.estimator_worst}};
    e["planner_time"] = {
        {"best", s.planner_best}, {"mean", s.planner_mean}, {"worst", s.planner_worst}};
    schemes.push_back(e);
  }
  j["schemes"] = schemes;
  return j.dump(2) + "\n";
}

void write_outputs(const BatteryResult& result, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [](const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return os;
  };
  {
    auto os = open(dir / "records.csv");
    write_records_csv(result.records, os);
  }
  {
    auto os = open(dir / "summary.json");
    os << summary_json(result);
  }
  for (const TrialRecord& r : result.records) {
    if (r.trace.empty()) continue;
    const fs::path sub = dir / "traces" / to_string(r.scheme);
    fs::create_directories(sub);
    auto os = open(sub / (std::to_string(r.seed) + ".csv"));
    write_trace_csv(r, os);
  }
}

}  // namespace lqmhpe
