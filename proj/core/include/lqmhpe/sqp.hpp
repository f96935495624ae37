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

// Sequential quadratic programming for smooth NLPs
//
//   minimize    f(x)
//   subject to  c(x) = 0,  h(x) <= 0,  lower <= x <= upper.
//
// The objective is either a least-squares form f = ||r(x)||^2 (Gauss-Newton
// Hessian 2 J'J) or a general smooth function (damped BFGS Hessian). Steps are
// globalized with an l1 exact-penalty merit function and Armijo backtracking.
// Every subproblem goes through the ADMM QP solver, either stacked into a
// single sparse QP (default) or through a caller-supplied structured backend.

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "lqmhpe/qp_solver.hpp"

namespace lqmhpe::nlp {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

struct NlpProblem {
  int num_variables = 0;
  Vector initial_guess;
  Vector lower;  // use -qp::kInfinity for unbounded
  Vector upper;

  // Least-squares objective f = ||r||^2. Takes precedence when set.
  std::function<Vector(const Vector&)> residual;
  std::function<SparseMatrix(const Vector&)> residual_jacobian;

  // General objective.
  std::function<double(const Vector&)> objective;
  std::function<Vector(const Vector&)> gradient;

  std::function<Vector(const Vector&)> equality;
  std::function<SparseMatrix(const Vector&)> equality_jacobian;

  // h(x) <= 0
  std::function<Vector(const Vector&)> inequality;
  std::function<SparseMatrix(const Vector&)> inequality_jacobian;

  bool is_least_squares() const { return static_cast<bool>(residual); }
  void validate() const;
};

/// Linearization handed to the subproblem backend; the step d solves
///   min 1/2 d'Hd + g'd  s.t.  c + Jc d = 0,  h + Jh d <= 0,  lo <= d <= hi.
struct SqpSubproblem {
  const SparseMatrix& hessian;
  const Vector& gradient;
  const SparseMatrix& eq_jacobian;
  const Vector& eq_value;
  const SparseMatrix& ineq_jacobian;
  const Vector& ineq_value;
  const Vector& step_lower;
  const Vector& step_upper;
};

/// Step and multipliers (convention: g + Hd + Jc'eq + Jh'ineq + bound = 0).
struct SqpStep {
  Vector step;
  Vector eq_multipliers;
  Vector ineq_multipliers;
  Vector bound_multipliers;
  qp::QpStatus status = qp::QpStatus::kMaxIterations;
  int qp_iterations = 0;
  bool elastic = false;
};

using SubproblemSolver = std::function<SqpStep(const SqpSubproblem&)>;

enum class SqpStatus { kConverged, kMaxIterations, kLineSearchFailed, kSubproblemFailed, kNumericalError };

std::string to_string(SqpStatus status);

struct SqpSettings {
  double tol = 1e-8;
  int max_iter = 100;
  qp::QpSettings qp = qp::settings_with_tolerance(1e-8);
  double armijo = 1e-4;
  double backtrack = 0.5;
  double min_step = 1e-8;
  double initial_penalty = 1.0;
  double penalty_margin = 1.1;
  double elastic_weight = 1e6;
  double hessian_regularization = 0.0;
  SubproblemSolver subproblem;  // empty: stacked sparse QP
};

struct KktResiduals {
  double stationarity = std::numeric_limits<double>::infinity();
  double feasibility = std::numeric_limits<double>::infinity();
  double complementarity = std::numeric_limits<double>::infinity();
};

struct SqpResult {
  Vector x;
  Vector eq_multipliers;
  Vector ineq_multipliers;
  Vector bound_multipliers;
  SqpStatus status = SqpStatus::kMaxIterations;
  int iterations = 0;
  int qp_iterations = 0;
  double objective = std::numeric_limits<double>::quiet_NaN();
  KktResiduals kkt;
  std::vector<double> merit_history;  // merit at each accepted iterate (fixed penalty per entry pair)
  std::vector<double> merit_decrease;  // phi(x_k) - phi(x_{k+1}) under the penalty used for step k
};

/// Runs SQP from problem.initial_guess (clamped into the bounds).
SqpResult solve_nlp(const NlpProblem& problem, const SqpSettings& settings = {},
                    const std::optional<SqpResult>& warm = std::nullopt);

/// The default backend: stacks everything into one sparse QP, falling back to
/// an elastic (slack-relaxed) QP when the linearization is infeasible.
SqpStep solve_stacked_subproblem(const SqpSubproblem& sub, const SqpSettings& settings);

}  // namespace lqmhpe::nlp
