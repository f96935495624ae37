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

// Battery configuration files.
//
// The format is a small subset of TOML: [section] headers, key = value
// pairs, '#' comments, and values that are quoted strings, integers, floats,
// booleans or single-line arrays of those. Unknown sections or keys, wrong
// value types and out-of-range values are rejected with a ConfigError that
// names the key.
//
//   [trial]          model, duration, dt
//   [randomization]  param_lower_factor, param_upper_factor, noise_bound,
//                    position_bound, velocity_bound, rate_bound,
//                    random_attitude, disturbance_channels
//   [nmpc]           horizon_n, position_weight, attitude_weight,
//                    velocity_weight, rate_weight, terminal_factor,
//                    input_weight, max_iter, tolerance
//   [mhpe]           horizon_m, disturbance_weight, include_quaternion_rows
//   [battery]        schemes, trials, seed, jobs
//   [output]         record_timing, record_trace, divergence_cost,
//                    divergence_state_bound
//
// Setting trial.model first loads that model's defaults; every other key
// overrides one field.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "lqmhpe/monte_carlo.hpp"

namespace lqmhpe {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message);
  /// Dotted key ("nmpc.horizon_n") the error refers to; empty for syntax
  /// errors outside any key.
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Parses configuration text. `source` prefixes error messages.
BatteryConfig parse_config(std::string_view text, const std::string& source = "<config>");

/// Reads and parses a configuration file.
BatteryConfig load_config(const std::filesystem::path& path);

/// Serializes a configuration in the same format; parse_config(to_config_text(c))
/// reproduces c.
std::string to_config_text(const BatteryConfig& cfg);

}  // namespace lqmhpe
