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

#include "lqmhpe/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

namespace lqmhpe::qp {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kMinScaling = 1e-4;
constexpr double kMaxScaling = 1e4;
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kEqualityRhoFactor = 1e3;
constexpr double kEqualityGap = 1e-4;
constexpr double kTiny = 1e-30;
constexpr Eigen::Index kDenseCheckLimit = 300;
constexpr int kPolishAttempts = 3;
constexpr double kPolishDeltaShrink = 1e-3;
constexpr double kPolishLinearTolerance = 1e-9;

enum class RowKind { kFree, kInequality, kEquality };

double inf_norm(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

double limit_scaling(double v) {
  if (v < kMinScaling) return 1.0;
  return std::min(v, kMaxScaling);
}

bool is_lower_infinite(double l) { return l <= -kInfinity; }
bool is_upper_infinite(double u) { return u >= kInfinity; }

VectorXd column_inf_norms(const SparseMatrix& m) {
  VectorXd norms = VectorXd::Zero(m.cols());
  for (int j = 0; j < m.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(m, j); it; ++it) {
      norms[j] = std::max(norms[j], std::abs(it.value()));
    }
  }
  return norms;
}

VectorXd column_inf_norms(const SparseRowMatrix& m) {
  VectorXd norms = VectorXd::Zero(m.cols());
  for (int i = 0; i < m.outerSize(); ++i) {
    for (SparseRowMatrix::InnerIterator it(m, i); it; ++it) {
      norms[it.col()] = std::max(norms[it.col()], std::abs(it.value()));
    }
  }
  return norms;
}

VectorXd row_inf_norms(const SparseRowMatrix& m) {
  VectorXd norms = VectorXd::Zero(m.rows());
  for (int i = 0; i < m.outerSize(); ++i) {
    for (SparseRowMatrix::InnerIterator it(m, i); it; ++it) {
      norms[i] = std::max(norms[i], std::abs(it.value()));
    }
  }
  return norms;
}

}  // namespace

void QpProblem::validate() const {
  const Eigen::Index n = q.size();
  if (P.rows() != n || P.cols() != n) throw std::invalid_argument("QP: P must be n x n");
  if (A.cols() != n && A.rows() > 0) throw std::invalid_argument("QP: A must have n columns");
  if (l.size() != A.rows() || u.size() != A.rows()) {
    throw std::invalid_argument("QP: l and u must have one entry per row of A");
  }
  if (!(l.array() <= u.array()).all()) throw std::invalid_argument("QP: l > u");
  auto asymmetric = [](double a, double b) { return std::abs(a - b) > 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); };
  if (n <= kDenseCheckLimit) {
    const MatrixXd pd(P);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = j + 1; i < n; ++i) {
        if (asymmetric(pd(i, j), pd(j, i))) throw std::invalid_argument("QP: P must be symmetric");
      }
    }
    return;
  }
  const SparseMatrix diff = SparseMatrix(P.transpose()) - P;
  for (int j = 0; j < diff.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(diff, j); it; ++it) {
      if (std::abs(it.value()) > 1e-12 * std::max(1.0, std::abs(P.coeff(it.row(), it.col())))) {
        throw std::invalid_argument("QP: P must be symmetric");
      }
    }
  }
}

double QpProblem::objective(const VectorXd& x) const { return 0.5 * x.dot(P * x) + q.dot(x); }

std::string to_string(QpStatus status) {
  switch (status) {
    case QpStatus::kSolved:
      return "solved";
    case QpStatus::kMaxIterations:
      return "max-iter";
    case QpStatus::kPrimalInfeasible:
      return "primal-infeasible";
    case QpStatus::kDualInfeasible:
      return "dual-infeasible";
  }
  return "unknown";
}

QpSettings settings_with_tolerance(double tol, int max_iter) {
  QpSettings s;
  s.eps_abs = tol;
  s.eps_rel = tol;
  s.max_iter = max_iter;
  return s;
}

struct QpSolver::Impl {
  QpSettings settings;
  QpProblem original;
  int n = 0;
  int m = 0;

  // Scaled data.
  SparseMatrix P;
  VectorXd q;
  SparseRowMatrix A;
  SparseMatrix At;
  VectorXd l, u;
  VectorXd D, E;
  double c = 1.0;
  std::vector<RowKind> kinds;

  double rho = 0.1;
  VectorXd rho_vec;
  bool dense = false;
  Eigen::LLT<MatrixXd> dense_factor;
  Eigen::SimplicialLDLT<SparseMatrix> sparse_factor;

  // Dense copies of the scaled and original cost matrices (dense mode only).
  MatrixXd P_dense;
  MatrixXd P_orig_dense;
  // Polishing reuses (P + delta I)^{-1} across attempts.
  mutable MatrixXd polish_hessian_inverse;
  mutable std::vector<int> last_failed_active;
  mutable bool has_failed_polish = false;

  Impl(const QpProblem& problem, const QpSettings& s) : settings(s), original(problem) {
    original.validate();
    n = original.num_variables();
    m = original.num_constraints();
    A = original.A;
    if (A.rows() == 0) A.resize(0, n);
    q = original.q;
    l = original.l;
    u = original.u;
    switch (settings.linear_system) {
      case LinearSystem::kDense:
        dense = true;
        break;
      case LinearSystem::kSparse:
        dense = false;
        break;
      case LinearSystem::kAuto:
        dense = n < settings.dense_threshold ||
                static_cast<double>(original.P.nonZeros()) >= 0.25 * static_cast<double>(n) * n;
        break;
    }
    if (dense) {
      P_orig_dense = MatrixXd(original.P);
      P_dense = P_orig_dense;
    } else {
      P = original.P;
    }
    scale();
    At = SparseMatrix(A.transpose());
    classify_rows();
    rho = settings.rho;
    set_rho_vector();
    factor();
  }

  VectorXd p_column_norms() const {
    if (!dense) return column_inf_norms(P);
    return n > 0 ? VectorXd(P_dense.cwiseAbs().colwise().maxCoeff().transpose()) : VectorXd();
  }

  void scale_cost(const VectorXd& d) {
    if (dense) {
      P_dense.array() *= (d * d.transpose()).array();
    } else {
      P = d.asDiagonal() * P * d.asDiagonal();
    }
  }

  VectorXd p_scaled(const VectorXd& v) const { return dense ? VectorXd(P_dense * v) : VectorXd(P * v); }
  VectorXd p_original(const VectorXd& v) const {
    return dense ? VectorXd(P_orig_dense * v) : VectorXd(original.P * v);
  }

  void scale() {
    D = VectorXd::Ones(n);
    E = VectorXd::Ones(m);
    c = 1.0;
    for (int it = 0; it < settings.scaling_iterations; ++it) {
      const VectorXd p_norm = p_column_norms();
      const VectorXd a_norm = column_inf_norms(A);
      VectorXd d_step(n);
      for (int j = 0; j < n; ++j) {
        d_step[j] = 1.0 / std::sqrt(limit_scaling(std::max(p_norm[j], a_norm[j])));
      }
      const VectorXd r_norm = row_inf_norms(A);
      VectorXd e_step(m);
      for (int i = 0; i < m; ++i) e_step[i] = 1.0 / std::sqrt(limit_scaling(r_norm[i]));

      scale_cost(d_step);
      A = e_step.asDiagonal() * A * d_step.asDiagonal();
      q = d_step.cwiseProduct(q);
      D = D.cwiseProduct(d_step);
      E = E.cwiseProduct(e_step);

      const VectorXd p_cols = p_column_norms();
      const double mean_p = n > 0 ? p_cols.mean() : 0.0;
      const double cost_scale =
          1.0 / limit_scaling(std::max(limit_scaling(mean_p), limit_scaling(inf_norm(q))));
      if (dense) {
        P_dense *= cost_scale;
      } else {
        P *= cost_scale;
      }
      q *= cost_scale;
      c *= cost_scale;
    }
    for (int i = 0; i < m; ++i) {
      l[i] = is_lower_infinite(original.l[i]) ? -kInfinity : E[i] * original.l[i];
      u[i] = is_upper_infinite(original.u[i]) ? kInfinity : E[i] * original.u[i];
    }
  }

  void classify_rows() {
    kinds.assign(m, RowKind::kInequality);
    for (int i = 0; i < m; ++i) {
      const bool lo_inf = is_lower_infinite(original.l[i]);
      const bool up_inf = is_upper_infinite(original.u[i]);
      if (lo_inf && up_inf) {
        kinds[i] = RowKind::kFree;
      } else if (!lo_inf && !up_inf && original.u[i] - original.l[i] < kEqualityGap) {
        kinds[i] = RowKind::kEquality;
      }
    }
  }

  void set_rho_vector() {
    rho_vec.resize(m);
    for (int i = 0; i < m; ++i) {
      switch (kinds[i]) {
        case RowKind::kFree:
          rho_vec[i] = kRhoMin;
          break;
        case RowKind::kEquality:
          rho_vec[i] = kEqualityRhoFactor * rho;
          break;
        case RowKind::kInequality:
          rho_vec[i] = rho;
          break;
      }
    }
  }

  void factor() {
    const double sigma = settings.sigma;
    if (dense) {
      MatrixXd k = P_dense;
      k.diagonal().array() += sigma;
      if (m > 0) k += MatrixXd(At * rho_vec.asDiagonal() * A);
      dense_factor.compute(k);
      return;
    }
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(P.nonZeros() + 2 * A.nonZeros() + n + m);
    for (int j = 0; j < P.outerSize(); ++j) {
      for (SparseMatrix::InnerIterator it(P, j); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
    }
    for (int j = 0; j < n; ++j) trip.emplace_back(j, j, sigma);
    for (int i = 0; i < A.outerSize(); ++i) {
      for (SparseRowMatrix::InnerIterator it(A, i); it; ++it) {
        trip.emplace_back(n + i, it.col(), it.value());
        trip.emplace_back(it.col(), n + i, it.value());
      }
    }
    for (int i = 0; i < m; ++i) trip.emplace_back(n + i, n + i, -1.0 / rho_vec[i]);
    SparseMatrix kkt(n + m, n + m);
    kkt.setFromTriplets(trip.begin(), trip.end());
    sparse_factor.compute(kkt);
  }

  VectorXd solve_linear(const VectorXd& x, const VectorXd& z, const VectorXd& y) const {
    const double sigma = settings.sigma;
    if (dense) {
      VectorXd rhs = sigma * x - q;
      if (m > 0) rhs += At * (rho_vec.cwiseProduct(z) - y);
      return dense_factor.solve(rhs);
    }
    VectorXd rhs(n + m);
    rhs.head(n) = sigma * x - q;
    rhs.tail(m) = z - y.cwiseQuotient(rho_vec);
    const VectorXd sol = sparse_factor.solve(rhs);
    return sol.head(n);
  }

  VectorXd project(const VectorXd& v) const { return v.cwiseMax(l).cwiseMin(u); }

  struct Residuals {
    double primal = 0.0;
    double dual = 0.0;
    double eps_primal = 0.0;
    double eps_dual = 0.0;
    // Scaled-space quantities for step-size adaptation.
    double scaled_primal_ratio = 0.0;
    double scaled_dual_ratio = 0.0;
    bool converged() const { return primal <= eps_primal && dual <= eps_dual; }
  };

  // x, z, y in unscaled coordinates.
  Residuals residuals(const VectorXd& x, const VectorXd& z, const VectorXd& y) const {
    Residuals r;
    const VectorXd ax = original.A.rows() > 0 ? VectorXd(original.A * x) : VectorXd::Zero(m);
    const VectorXd px = p_original(x);
    const VectorXd aty = original.A.rows() > 0 ? VectorXd(original.A.transpose() * y) : VectorXd::Zero(n);
    r.primal = inf_norm(ax - z);
    r.dual = inf_norm(px + original.q + aty);
    r.eps_primal = settings.eps_abs + settings.eps_rel * std::max(inf_norm(ax), inf_norm(z));
    r.eps_dual = settings.eps_abs +
                 settings.eps_rel * std::max({inf_norm(px), inf_norm(aty), inf_norm(original.q)});
    return r;
  }

  void scaled_ratios(const VectorXd& xs, const VectorXd& zs, const VectorXd& ys, Residuals& r) const {
    const VectorXd ax = A * xs;
    const VectorXd px = p_scaled(xs);
    const VectorXd aty = At * ys;
    const double prim = inf_norm(ax - zs);
    const double dual = inf_norm(px + q + aty);
    r.scaled_primal_ratio = prim / (std::max(inf_norm(ax), inf_norm(zs)) + kTiny);
    r.scaled_dual_ratio = dual / (std::max({inf_norm(px), inf_norm(aty), inf_norm(q)}) + kTiny);
  }

  void unscale(const VectorXd& xs, const VectorXd& zs, const VectorXd& ys, VectorXd& x, VectorXd& z,
               VectorXd& y) const {
    x = D.cwiseProduct(xs);
    z = zs.cwiseQuotient(E);
    y = E.cwiseProduct(ys) / c;
  }

  bool primal_infeasible(const VectorXd& dys) const {
    if (m == 0) return false;
    const VectorXd dy = E.cwiseProduct(dys) / c;
    const double norm = inf_norm(dy);
    if (norm < kTiny) return false;
    const double eps = settings.eps_infeasible * norm;
    if (inf_norm(original.A.transpose() * dy) > eps) return false;
    double support = 0.0;
    for (int i = 0; i < m; ++i) {
      if (dy[i] > 0.0) {
        if (is_upper_infinite(original.u[i])) {
          if (dy[i] > eps) return false;
          continue;
        }
        support += original.u[i] * dy[i];
      } else if (dy[i] < 0.0) {
        if (is_lower_infinite(original.l[i])) {
          if (-dy[i] > eps) return false;
          continue;
        }
        support += original.l[i] * dy[i];
      }
    }
    return support < -eps;
  }

  bool dual_infeasible(const VectorXd& dxs) const {
    const VectorXd dx = D.cwiseProduct(dxs);
    const double norm = inf_norm(dx);
    if (norm < kTiny) return false;
    const double eps = settings.eps_infeasible * norm;
    if (original.q.dot(dx) >= -eps) return false;
    if (m > 0) {
      const VectorXd adx = original.A * dx;
      for (int i = 0; i < m; ++i) {
        const bool lo_inf = is_lower_infinite(original.l[i]);
        const bool up_inf = is_upper_infinite(original.u[i]);
        if (!up_inf && adx[i] > eps) return false;
        if (!lo_inf && adx[i] < -eps) return false;
      }
    }
    return inf_norm(p_original(dx)) <= eps;
  }

  // Re-solve the equality-constrained QP on the active set guessed from the
  // current iterate; returns true and fills the solution when the result
  // satisfies the termination criteria with consistent multiplier signs.
  bool polish(const VectorXd& zs, const VectorXd& ys, QpSolution& out) const {
    std::vector<int> active;
    std::vector<double> target;
    std::vector<int> side;  // -1 lower, +1 upper, 0 equality
    for (int i = 0; i < m; ++i) {
      if (kinds[i] == RowKind::kFree) continue;
      if (kinds[i] == RowKind::kEquality) {
        active.push_back(i);
        target.push_back(l[i]);
        side.push_back(0);
      } else if (!is_lower_infinite(original.l[i]) && zs[i] - l[i] < -ys[i]) {
        active.push_back(i);
        target.push_back(l[i]);
        side.push_back(-1);
      } else if (!is_upper_infinite(original.u[i]) && u[i] - zs[i] < ys[i]) {
        active.push_back(i);
        target.push_back(u[i]);
        side.push_back(1);
      }
    }
    if (has_failed_polish && active == last_failed_active) return false;
    auto fail = [&]() {
      last_failed_active = active;
      has_failed_polish = true;
      return false;
    };
    const int na = static_cast<int>(active.size());

    SparseRowMatrix a_act(na, n);
    {
      std::vector<Eigen::Triplet<double>> trip;
      for (int r = 0; r < na; ++r) {
        for (SparseRowMatrix::InnerIterator it(A, active[r]); it; ++it) {
          trip.emplace_back(r, it.col(), it.value());
        }
      }
      a_act.setFromTriplets(trip.begin(), trip.end());
    }
    VectorXd rhs(n + na);
    rhs.head(n) = -q;
    for (int r = 0; r < na; ++r) rhs[n + r] = target[r];

    // Iterative refinement only converges when delta is small relative to the
    // smallest KKT eigenvalue. When the refined solution still leaves a large
    // linear residual, retry with a smaller regularization; otherwise a failed
    // check means the active set is wrong and retrying cannot help.
    for (int attempt = 0; attempt < kPolishAttempts; ++attempt) {
      const double delta = settings.polish_delta * std::pow(kPolishDeltaShrink, attempt);
      double linear_residual = 0.0;
      const std::optional<VectorXd> sol = polish_solve(a_act, rhs, delta, attempt == 0, linear_residual);
      const bool refined = linear_residual <= kPolishLinearTolerance * std::max(1.0, inf_norm(rhs));
      if (!sol) {
        if (refined) return fail();
        continue;
      }

      VectorXd xs_p = sol->head(n);
      VectorXd ys_p = VectorXd::Zero(m);
      for (int r = 0; r < na; ++r) ys_p[active[r]] = (*sol)[n + r];
      VectorXd zs_p = project(A * xs_p);

      VectorXd x, z, y;
      unscale(xs_p, zs_p, ys_p, x, z, y);
      Residuals res = residuals(x, z, y);
      if (!res.converged()) {
        if (refined) return fail();
        continue;
      }
      const double sign_tol = res.eps_dual;
      bool signs_ok = true;
      for (int r = 0; r < na; ++r) {
        const double yv = y[active[r]];
        if ((side[r] < 0 && yv > sign_tol) || (side[r] > 0 && yv < -sign_tol)) signs_ok = false;
      }
      // Wrong multiplier signs mean a wrong active set, which a smaller
      // regularization cannot fix.
      if (!signs_ok) return fail();
      out.x = x;
      out.y = y;
      out.primal_residual = res.primal;
      out.dual_residual = res.dual;
      out.polished = true;
      out.status = QpStatus::kSolved;
      return true;
    }
    return fail();
  }

  // Solves the regularized KKT system of the active set with iterative
  // refinement. The dense Hessian inverse is cached for the first delta only.
  std::optional<VectorXd> polish_solve(const SparseRowMatrix& a_act, const VectorXd& rhs,
                                       double delta, bool cacheable,
                                       double& linear_residual) const {
    linear_residual = std::numeric_limits<double>::infinity();
    const int na = static_cast<int>(a_act.rows());
    auto apply_kkt = [&](const VectorXd& sol) {
      VectorXd out_v(n + na);
      out_v.head(n) = p_scaled(sol.head(n)) + a_act.transpose() * sol.tail(na);
      out_v.tail(na) = a_act * sol.head(n);
      return out_v;
    };

    VectorXd sol;
    if (dense) {
      // Schur complement of the regularized KKT matrix; both factors are SPD.
      MatrixXd local_inverse;
      if (!cacheable || polish_hessian_inverse.size() == 0) {
        MatrixXd h = P_dense;
        h.diagonal().array() += delta;
        const Eigen::LLT<MatrixXd> h_fac(h);
        if (h_fac.info() != Eigen::Success) return std::nullopt;
        local_inverse = h_fac.solve(MatrixXd::Identity(n, n));
        if (cacheable) polish_hessian_inverse = local_inverse;
      }
      const MatrixXd& h_inv = cacheable ? polish_hessian_inverse : local_inverse;
      const SparseMatrix at = SparseMatrix(a_act.transpose());
      const MatrixXd hinv_at = h_inv * at;
      MatrixXd schur = a_act * hinv_at;
      schur.diagonal().array() += delta;
      const Eigen::LLT<MatrixXd> s_fac(schur);
      if (na > 0 && s_fac.info() != Eigen::Success) return std::nullopt;
      auto solve_reg = [&](const VectorXd& b) {
        const VectorXd hb = h_inv * b.head(n);
        VectorXd res(n + na);
        if (na > 0) {
          const VectorXd yv = s_fac.solve(a_act * hb - b.tail(na));
          res.tail(na) = yv;
          res.head(n) = hb - hinv_at * yv;
        } else {
          res.head(n) = hb;
        }
        return res;
      };
      sol = solve_reg(rhs);
      for (int k = 0; k < settings.polish_refine_iterations; ++k) {
        sol += solve_reg(rhs - apply_kkt(sol));
      }
    } else {
      std::vector<Eigen::Triplet<double>> trip;
      for (int j = 0; j < P.outerSize(); ++j) {
        for (SparseMatrix::InnerIterator it(P, j); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
      }
      for (int j = 0; j < n; ++j) trip.emplace_back(j, j, delta);
      for (int r = 0; r < na; ++r) {
        for (SparseRowMatrix::InnerIterator it(a_act, r); it; ++it) {
          trip.emplace_back(n + r, it.col(), it.value());
          trip.emplace_back(it.col(), n + r, it.value());
        }
        trip.emplace_back(n + r, n + r, -delta);
      }
      SparseMatrix kkt(n + na, n + na);
      kkt.setFromTriplets(trip.begin(), trip.end());
      Eigen::SimplicialLDLT<SparseMatrix> fac(kkt);
      if (fac.info() != Eigen::Success) return std::nullopt;
      sol = fac.solve(rhs);
      for (int k = 0; k < settings.polish_refine_iterations; ++k) {
        sol += fac.solve(rhs - apply_kkt(sol));
      }
    }
    if (!sol.allFinite()) return std::nullopt;
    linear_residual = inf_norm(rhs - apply_kkt(sol));
    return sol;
  }

  QpSolution run(const std::optional<WarmStart>& warm) {
    has_failed_polish = false;
    VectorXd xs = VectorXd::Zero(n);
    VectorXd ys = VectorXd::Zero(m);
    if (warm) {
      if (warm->x.size() == n) xs = warm->x.cwiseQuotient(D);
      if (warm->y.size() == m) ys = warm->y.cwiseQuotient(E) * c;
    }
    VectorXd zs = project(A * xs);

    QpSolution out;
    const double alpha = settings.alpha;
    VectorXd x, z, y;
    for (int k = 1; k <= settings.max_iter; ++k) {
      const VectorXd x_tilde = solve_linear(xs, zs, ys);
      const VectorXd z_tilde = A * x_tilde;
      const VectorXd x_next = alpha * x_tilde + (1.0 - alpha) * xs;
      const VectorXd z_relaxed = alpha * z_tilde + (1.0 - alpha) * zs;
      const VectorXd z_next = project(z_relaxed + ys.cwiseQuotient(rho_vec));
      const VectorXd y_next = ys + rho_vec.cwiseProduct(z_relaxed - z_next);
      const VectorXd dxs = x_next - xs;
      const VectorXd dys = y_next - ys;
      xs = x_next;
      zs = z_next;
      ys = y_next;
      out.iterations = k;

      const bool check = k <= 10 || k % settings.check_interval == 0 || k == settings.max_iter;
      if (!check) continue;

      unscale(xs, zs, ys, x, z, y);
      Residuals res = residuals(x, z, y);
      out.x = x;
      out.y = y;
      out.primal_residual = res.primal;
      out.dual_residual = res.dual;
      if (!x.allFinite() || !y.allFinite()) break;

      if (res.converged()) {
        out.status = QpStatus::kSolved;
        if (settings.polish) {
          QpSolution polished = out;
          if (polish(zs, ys, polished)) out = polished;
        }
        break;
      }
      if (primal_infeasible(dys)) {
        out.status = QpStatus::kPrimalInfeasible;
        break;
      }
      if (dual_infeasible(dxs)) {
        out.status = QpStatus::kDualInfeasible;
        break;
      }
      if (settings.polish && k % settings.polish_interval == 0) {
        if (polish(zs, ys, out)) break;
      }
      if (settings.adaptive_rho && k % settings.adaptive_rho_interval == 0 && m > 0) {
        scaled_ratios(xs, zs, ys, res);
        double rho_new = rho * std::sqrt(res.scaled_primal_ratio / (res.scaled_dual_ratio + kTiny));
        rho_new = std::clamp(rho_new, kRhoMin, kRhoMax);
        if (rho_new > rho * settings.adaptive_rho_tolerance ||
            rho_new < rho / settings.adaptive_rho_tolerance) {
          rho = rho_new;
          set_rho_vector();
          factor();
        }
      }
    }
    if (out.x.size() == n && out.x.allFinite()) out.objective = original.objective(out.x);
    return out;
  }
};

QpSolver::QpSolver(const QpProblem& problem, const QpSettings& settings)
    : impl_(std::make_unique<Impl>(problem, settings)) {}
QpSolver::~QpSolver() = default;
QpSolver::QpSolver(QpSolver&&) noexcept = default;
QpSolver& QpSolver::operator=(QpSolver&&) noexcept = default;

QpSolution QpSolver::solve(const std::optional<WarmStart>& warm) {
  // Each solve starts from the configured step size so repeated calls are
  // reproducible.
  if (impl_->rho != impl_->settings.rho) {
    impl_->rho = impl_->settings.rho;
    impl_->set_rho_vector();
    impl_->factor();
  }
  return impl_->run(warm);
}

bool QpSolver::uses_dense_factorization() const { return impl_->dense; }

QpSolution solve(const QpProblem& problem, const QpSettings& settings,
                 const std::optional<WarmStart>& warm) {
  QpSolver solver(problem, settings);
  return solver.solve(warm);
}

void write_debug_dump(const QpProblem& problem, std::ostream& os) {
  os.precision(17);
  const int n = problem.num_variables();
  const int m = problem.num_constraints();
  os << "%%qp-dump coordinate real\n";
  os << "% P " << n << " " << n << " " << problem.P.nonZeros() << "\n";
  for (int j = 0; j < problem.P.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(problem.P, j); it; ++it) {
      os << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
    }
  }
  os << "% q " << n << "\n";
  for (int i = 0; i < n; ++i) os << problem.q[i] << "\n";
  os << "% A " << m << " " << n << " " << problem.A.nonZeros() << "\n";
  for (int i = 0; i < problem.A.outerSize(); ++i) {
    for (SparseRowMatrix::InnerIterator it(problem.A, i); it; ++it) {
      os << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
    }
  }
  os << "% l " << m << "\n";
  for (int i = 0; i < m; ++i) os << problem.l[i] << "\n";
  os << "% u " << m << "\n";
  for (int i = 0; i < m; ++i) os << problem.u[i] << "\n";
}

}  // namespace lqmhpe::qp
