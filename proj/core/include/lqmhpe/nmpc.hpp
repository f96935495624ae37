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

// Receding-horizon trajectory optimization for the multirotor.
//
// The planner transcribes the finite-horizon problem by multiple shooting,
//   z = [x_0, u_0, x_1, u_1, ..., x_{N-1}, u_{N-1}, x_N],
// with RK4 defects of the affine model as equality constraints, the measured
// state pinned at stage 0, and per-rotor thrust bounds. The cost is the usual
// tracking quadratic, written as a least-squares residual so the SQP solver
// uses a Gauss-Newton Hessian. Each QP subproblem is condensed onto the
// inputs and solved as a dense box-constrained QP.

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "lqmhpe/model.hpp"
#include "lqmhpe/relaxation.hpp"
#include "lqmhpe/sqp.hpp"

namespace lqmhpe {

using StateWeight = Eigen::Matrix<double, kStateDim, kStateDim>;
using InputWeight = Eigen::Matrix<double, kInputDim, kInputDim>;

struct NmpcConfig {
  int horizon = 25;
  double dt = 0.02;
  StateWeight Q = StateWeight::Zero();
  StateWeight Qf = StateWeight::Zero();
  InputWeight R = InputWeight::Zero();
  StateVector x_ref = StateVector::Zero();
  InputVector u_ref = InputVector::Zero();
  double u_min = 0.0;
  double u_max = 0.0;
  Eigen::Vector3d gravity = Eigen::Vector3d(0.0, 0.0, -9.81);
  nlp::SqpSettings sqp;

  /// Q = diag(10 I3, 100 I4, I3, I3), Qf = 10 Q, R = 0.1 I, reference at the
  /// origin with identity attitude, hover feedforward at the nominal mass,
  /// two SQP iterations per call at tolerance 1e-5.
  static NmpcConfig defaults(const ModelSpec& model);

  /// Throws std::invalid_argument on a non-PSD weight or bad horizon.
  void validate() const;
};

/// Per-rotor hover thrust implied by a relaxed parameter vector.
InputVector hover_input(const ParamVector& vartheta,
                        const Eigen::Vector3d& gravity = Eigen::Vector3d(0.0, 0.0, -9.81));

struct PlannedTrajectory {
  std::vector<StateVector> states;  // N + 1
  std::vector<InputVector> inputs;  // N
  double objective = 0.0;
  nlp::SqpStatus status = nlp::SqpStatus::kMaxIterations;
  int iterations = 0;
  int qp_iterations = 0;
  double max_defect = 0.0;
  double solve_time = 0.0;  // seconds
  bool fallback = false;    // true when the solver failed and a shifted plan was returned
};

/// Index helpers for the stacked decision vector.
struct ShootingLayout {
  int horizon = 0;
  static constexpr int kStride = kStateDim + kInputDim;
  int num_variables() const { return horizon * kStride + kStateDim; }
  int num_defects() const { return (horizon + 1) * kStateDim; }
  int state(int i) const { return i * kStride; }
  int input(int i) const { return i * kStride + kStateDim; }
};

/// Builds the multiple-shooting NLP for a given measured state and relaxed
/// parameter vector. Exposed for testing.
nlp::NlpProblem build_nmpc_problem(const StateVector& x0, const ParamVector& vartheta,
                                   const NmpcConfig& cfg, const Eigen::VectorXd& initial_guess);

/// Condensing backend for the shooting QP subproblem.
nlp::SqpStep solve_condensed_subproblem(const nlp::SqpSubproblem& sub, const ShootingLayout& layout,
                                        const qp::QpSettings& settings);

/// Plans from the measured state x0 using the model vartheta. A warm plan is
/// shifted one step forward and used as the initial guess.
PlannedTrajectory plan(const StateVector& x0, const ParamVector& vartheta, const NmpcConfig& cfg,
                       const std::optional<PlannedTrajectory>& warm = std::nullopt);

/// Convenience overload for a nominal parameter estimate.
PlannedTrajectory plan(const StateVector& x0, const NominalParams& theta, const NmpcConfig& cfg,
                       const std::optional<PlannedTrajectory>& warm = std::nullopt);

/// Shifts a plan one step forward, repeating the last input and propagating
/// the last state with it.
PlannedTrajectory shift_plan(const PlannedTrajectory& plan, const ParamVector& vartheta,
                             const NmpcConfig& cfg);

/// First input, clamped to [u_min, u_max].
InputVector apply_first(const PlannedTrajectory& plan, const NmpcConfig& cfg);

}  // namespace lqmhpe
