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

// Convex quadratic programs
//
//   minimize    1/2 x'Px + q'x
//   subject to  l <= Ax <= u
//
// solved with an operator-splitting (ADMM) method: Ruiz equilibration,
// per-row step sizes (stiffer on equality rows), adaptive step-size updates,
// infeasibility certificates from successive iterate differences, and a
// polishing pass that re-solves the KKT system on the detected active set.

#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace lqmhpe::qp {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Bounds at or beyond this magnitude are treated as infinite.
inline constexpr double kInfinity = 1e20;

struct QpProblem {
  SparseMatrix P;     // n x n, symmetric positive semidefinite (full storage)
  Eigen::VectorXd q;  // n
  SparseRowMatrix A;  // k x n
  Eigen::VectorXd l;  // k
  Eigen::VectorXd u;  // k

  int num_variables() const { return static_cast<int>(q.size()); }
  int num_constraints() const { return static_cast<int>(l.size()); }

  /// Throws std::invalid_argument on dimension mismatch, asymmetric P or l > u.
  void validate() const;

  double objective(const Eigen::VectorXd& x) const;
};

enum class QpStatus { kSolved, kMaxIterations, kPrimalInfeasible, kDualInfeasible };

std::string to_string(QpStatus status);

enum class LinearSystem { kAuto, kDense, kSparse };

struct QpSettings {
  double eps_abs = 1e-8;
  double eps_rel = 1e-8;
  double eps_infeasible = 1e-6;
  int max_iter = 4000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  bool adaptive_rho = true;
  int adaptive_rho_interval = 25;
  double adaptive_rho_tolerance = 5.0;
  int scaling_iterations = 10;
  bool polish = true;
  int polish_interval = 5;
  int polish_refine_iterations = 3;
  double polish_delta = 1e-9;
  int check_interval = 5;
  LinearSystem linear_system = LinearSystem::kAuto;
  int dense_threshold = 50;
};

struct QpSolution {
  Eigen::VectorXd x;  // primal
  Eigen::VectorXd y;  // dual; Px + q + A'y = 0 at optimum
  QpStatus status = QpStatus::kMaxIterations;
  int iterations = 0;
  double primal_residual = std::numeric_limits<double>::infinity();
  double dual_residual = std::numeric_limits<double>::infinity();
  double objective = std::numeric_limits<double>::quiet_NaN();
  bool polished = false;
};

struct WarmStart {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

/// Solver instance. Holds the scaled problem and factorization; not safe to
/// share across threads, but separate instances are independent.
class QpSolver {
 public:
  QpSolver(const QpProblem& problem, const QpSettings& settings = {});
  ~QpSolver();
  QpSolver(QpSolver&&) noexcept;
  QpSolver& operator=(QpSolver&&) noexcept;
  QpSolver(const QpSolver&) = delete;
  QpSolver& operator=(const QpSolver&) = delete;

  QpSolution solve(const std::optional<WarmStart>& warm = std::nullopt);

  bool uses_dense_factorization() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot convenience wrapper.
QpSolution solve(const QpProblem& problem, const QpSettings& settings = {},
                 const std::optional<WarmStart>& warm = std::nullopt);

/// Settings with eps_abs = eps_rel = tol and the given iteration cap.
QpSettings settings_with_tolerance(double tol, int max_iter = 4000);

/// Plain-text dump of (P, q, A, l, u) in coordinate (matrix-market-like) form.
void write_debug_dump(const QpProblem& problem, std::ostream& os);

}  // namespace lqmhpe::qp
