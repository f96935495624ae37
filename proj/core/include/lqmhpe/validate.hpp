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

// Property checks against independent oracles. Each check draws its own
// seeded samples and reports the worst observed error against a fixed
// threshold.

#include <cstdint>
#include <string>
#include <vector>

#include "lqmhpe/model.hpp"

namespace lqmhpe {

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;      // worst observed error (or violation count)
  double threshold = 0.0;  // pass when worst <= threshold
  int samples = 0;
  double seconds = 0.0;
  std::string detail;
};

/// max |f(x, u, theta) - (F(x) + G(x, u) relax(theta))|_inf over random
/// states, inputs and parameters in the nominal box. With corrupt_input_matrix
/// set, one entry of G has its sign flipped before the comparison; the check
/// must then fail.
CheckResult check_affine_equivalence(const ModelSpec& spec, int samples, std::uint64_t seed,
                                     bool corrupt_input_matrix = false);

/// Dual-number Jacobian of one RK4 step with respect to (x, u, theta) against
/// central differences. Columns are taken in parameter units scaled by the
/// nominal value; the error of a column is relative to max(|column|_inf, 1).
CheckResult check_rk4_jacobian(const ModelSpec& spec, int points, std::uint64_t seed);

/// Random strictly convex QPs with up to 12 one-sided inequality constraints
/// solved by the ADMM solver and by exhaustive active-set enumeration.
CheckResult check_qp_oracle(int problems, std::uint64_t seed);

/// Counts relaxed vectors relax(theta) outside transform_bounds(box) for
/// theta drawn from the box (half of the samples on random corners).
CheckResult check_bound_soundness(const ModelSpec& spec, int samples, std::uint64_t seed);

enum class EstimatorKind { kLq, kNonlinear };

/// Windows generated from each estimator's own discretization with the true
/// parameters as prior; the estimate must return them. Error is the largest
/// entrywise deviation relative to max(|true value|, box width), which stays
/// meaningful for entries whose true value is near zero.
CheckResult check_estimator_fixed_point(const ModelSpec& spec, EstimatorKind kind, int cases,
                                        std::uint64_t seed);

struct ValidationOptions {
  bool quick = false;
  std::uint64_t seed = 20240601;
  bool corrupt_input_matrix = false;
};

/// All checks on both models. Full sizes: 1e4 equivalence samples, 100
/// Jacobian points, 200 QPs, 1e5 bound samples, 50 fixed-point cases per
/// estimator. --quick divides each by ten.
std::vector<CheckResult> run_validation(const ValidationOptions& options);

}  // namespace lqmhpe
