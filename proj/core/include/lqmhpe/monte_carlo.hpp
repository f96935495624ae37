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

#pragma once

// Closed-loop Monte Carlo trials: a true vehicle with randomized parameters,
// a randomized initial state and bounded random disturbances, flown by the
// receding-horizon planner with one of three estimation schemes.
//
// Trials are paired across schemes by common random numbers: the true
// parameters, the initial state and the disturbance sequence depend only on
// (seed, stream), never on the scheme or on how many draws a scheme makes.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lqmhpe/dynamics.hpp"
#include "lqmhpe/mhpe.hpp"
#include "lqmhpe/model.hpp"
#include "lqmhpe/nmpc.hpp"

namespace lqmhpe {

enum class Scheme { kNone, kLqMhpe, kNmhpe };

std::string to_string(Scheme scheme);
/// "none", "lq_mhpe" or "nmhpe". Throws std::invalid_argument otherwise.
Scheme parse_scheme(const std::string& name);

/// Tuning shared by every trial of a battery.
struct TrialConfig {
  std::string model = "crazyflie";
  Scheme scheme = Scheme::kLqMhpe;
  std::uint64_t seed = 0;

  double duration = 10.0;  // s
  double dt = 0.02;        // s

  // Randomization.
  double param_lower_factor = 0.5;
  double param_upper_factor = 1.5;
  double noise_bound = 2.5;
  double position_bound = 5.0;
  double velocity_bound = 2.5;
  double rate_bound = 2.5;
  bool random_attitude = true;
  DisturbanceChannels disturbance_channels = DisturbanceChannels::kTranslationalAndRates;

  // Controller.
  int horizon_n = 25;
  double position_weight = 10.0;
  double attitude_weight = 100.0;
  double velocity_weight = 1.0;
  double rate_weight = 1.0;
  double terminal_factor = 10.0;
  double input_weight = 0.1;
  int nmpc_max_iter = 2;
  double nmpc_tolerance = 1e-5;

  // Estimators.
  int horizon_m = 10;
  double disturbance_weight = 1e6;
  bool include_quaternion_rows = true;

  // Bookkeeping.
  double divergence_cost = 1e8;
  double divergence_state_bound = 1e6;
  bool record_timing = true;
  bool record_trace = false;

  /// Default randomization bounds and tuning for the named model.
  static TrialConfig for_model(const std::string& model);

  int num_steps() const;
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  NmpcConfig nmpc_config(const ModelSpec& spec) const;
  EstimatorSettings estimator_settings(const ModelSpec& spec) const;
};

/// Per-step log of one trial.
struct TraceRow {
  double time = 0.0;
  StateVector state = StateVector::Zero();
  InputVector input = InputVector::Zero();
  ParamVector estimate = ParamVector::Zero();  // relaxed parameters used by the planner
  double stage_cost = 0.0;
  double estimator_time = 0.0;
  double planner_time = 0.0;
};

struct TimingStats {
  int count = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;

  static TimingStats of(const std::vector<double>& samples);
};

struct TrialRecord {
  std::uint64_t seed = 0;
  std::string model;
  Scheme scheme = Scheme::kNone;
  double cost = 0.0;
  bool diverged = false;
  double final_position_error = 0.0;
  int steps = 0;
  int estimator_failures = 0;
  int planner_fallbacks = 0;
  std::vector<double> estimator_times;  // one entry per estimator solve
  std::vector<double> planner_times;    // one entry per step
  TimingStats estimator;
  TimingStats planner;
  std::vector<TraceRow> trace;  // filled when record_trace is set
};

/// The random draws of one trial, shared by all schemes with that seed.
struct TrialScenario {
  NominalParams true_params;
  StateVector initial_state = StateVector::Zero();
  std::vector<Disturbance> disturbances;  // one per step, already masked
};

TrialScenario draw_scenario(const TrialConfig& cfg, const ModelSpec& spec);

/// Uniformly distributed unit quaternion from three uniform [0, 1) draws.
Eigen::Vector4d uniform_quaternion(double u1, double u2, double u3);

/// Stage cost ||x - x_ref||_Q^2 + ||u - u_ref||_R^2 with the reference
/// quaternion moved into the hemisphere of x.
double stage_cost(const StateVector& x, const InputVector& u, const NmpcConfig& nmpc,
                  const InputVector& u_ref);

TrialRecord run_trial(const TrialConfig& cfg);
TrialRecord run_trial(const TrialConfig& cfg, const TrialScenario& scenario);

struct BatteryConfig {
  TrialConfig base;
  std::vector<Scheme> schemes = {Scheme::kNone, Scheme::kLqMhpe, Scheme::kNmhpe};
  int trials = 100;
  std::uint64_t first_seed = 0;
  int jobs = 1;
};

/// Best, mean and worst aggregates for one scheme.
struct SchemeSummary {
  Scheme scheme = Scheme::kNone;
  int trials = 0;
  int diverged = 0;
  int converged = 0;  // final position error below 1 m
  double cost_best = 0.0;
  double cost_mean = 0.0;
  double cost_worst = 0.0;
  double estimator_best = 0.0;   // min over trials of the per-trial minimum
  double estimator_mean = 0.0;   // mean over trials of the per-trial mean
  double estimator_worst = 0.0;  // max over trials of the per-trial maximum
  double planner_best = 0.0;
  double planner_mean = 0.0;
  double planner_worst = 0.0;
};

struct BatteryResult {
  BatteryConfig config;
  std::vector<TrialRecord> records;  // scheme-major, seed order within a scheme
  std::vector<SchemeSummary> summaries;
};

SchemeSummary summarize(Scheme scheme, const std::vector<TrialRecord>& records);

/// Runs every (scheme, seed) pair on up to `jobs` worker threads. The result
/// does not depend on `jobs`.
BatteryResult run_battery(const BatteryConfig& cfg);

}  // namespace lqmhpe
