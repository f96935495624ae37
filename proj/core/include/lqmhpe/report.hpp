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

// Result files of a battery:
//   records.csv        one row per trial
//   summary.json       per-scheme aggregates plus the configuration that ran
//   traces/<scheme>/<seed>.csv   optional per-step logs
//
// Floating-point values are written with 17 significant digits so they
// round-trip exactly.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lqmhpe/monte_carlo.hpp"

namespace lqmhpe {

/// Column names of records.csv, in order.
const std::vector<std::string>& record_columns();

/// Column names of a trace file, in order.
const std::vector<std::string>& trace_columns();

/// Multi-line human-readable description of both CSV schemas.
std::string csv_schema_help();

void write_records_csv(const std::vector<TrialRecord>& records, std::ostream& os);
void write_trace_csv(const TrialRecord& record, std::ostream& os);

/// JSON text of the summary, including the embedded configuration block.
std::string summary_json(const BatteryResult& result);

/// JSON text of a battery configuration (the block embedded in summary.json).
std::string config_json(const BatteryConfig& cfg);

/// Writes records.csv, summary.json and, for records with a trace, the trace
/// files under `dir`. Creates `dir` when missing.
void write_outputs(const BatteryResult& result, const std::filesystem::path& dir);

/// %.17g formatting.
std::string format_double(double v);

}  // namespace lqmhpe
