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

#include "lqmhpe/sqp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace lqmhpe::nlp {

namespace {

using qp::kInfinity;
using Eigen::MatrixXd;
using Triplet = Eigen::Triplet<double>;

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

double violation_l1(const Vector& c, const Vector& h) {
  double v = c.size() ? c.lpNorm<1>() : 0.0;
  for (Eigen::Index i = 0; i < h.size(); ++i) v += std::max(h[i], 0.0);
  return v;
}

double violation_inf(const Vector& c, const Vector& h) {
  double v = inf_norm(c);
  for (Eigen::Index i = 0; i < h.size(); ++i) v = std::max(v, h[i]);
  return v;
}

void append(std::vector<Triplet>& trip, const SparseMatrix& m, int row_offset, int col_offset,
            double scale = 1.0) {
  for (int j = 0; j < m.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(m, j); it; ++it) {
      trip.emplace_back(row_offset + it.row(), col_offset + it.col(), scale * it.value());
    }
  }
}

struct Evaluation {
  double objective = 0.0;
  Vector gradient;
  SparseMatrix hessian;  // only filled for least-squares problems
  Vector eq;
  SparseMatrix eq_jac;
  Vector ineq;
  SparseMatrix ineq_jac;
};

class Evaluator {
 public:
  explicit Evaluator(const NlpProblem& p) : p_(p) {}

  double objective(const Vector& x) const {
    if (p_.is_least_squares()) return p_.residual(x).squaredNorm();
    return p_.objective(x);
  }
  Vector eq(const Vector& x) const { return p_.equality ? p_.equality(x) : Vector(); }
  Vector ineq(const Vector& x) const { return p_.inequality ? p_.inequality(x) : Vector(); }

  Evaluation full(const Vector& x) const {
    Evaluation e;
    const int n = p_.num_variables;
    if (p_.is_least_squares()) {
      const Vector r = p_.residual(x);
      const SparseMatrix jr = p_.residual_jacobian(x);
      e.objective = r.squaredNorm();
      e.gradient = 2.0 * (jr.transpose() * r);
      e.hessian = 2.0 * SparseMatrix(jr.transpose() * jr);
    } else {
      e.objective = p_.objective(x);
      e.gradient = p_.gradient(x);
    }
    e.eq = eq(x);
    e.eq_jac = p_.equality_jacobian ? p_.equality_jacobian(x) : SparseMatrix(0, n);
    e.ineq = ineq(x);
    e.ineq_jac = p_.inequality_jacobian ? p_.inequality_jacobian(x) : SparseMatrix(0, n);
    return e;
  }

 private:
  const NlpProblem& p_;
};

KktResiduals kkt_residuals(const Evaluation& e, const Vector& x, const Vector& lower,
                           const Vector& upper, const Vector& lam, const Vector& mu,
                           const Vector& z) {
  KktResiduals k;
  Vector grad_l = e.gradient + z;
  if (lam.size()) grad_l += e.eq_jac.transpose() * lam;
  if (mu.size()) grad_l += e.ineq_jac.transpose() * mu;
  k.stationarity = inf_norm(grad_l);
  double bound_violation = 0.0;
  double comp = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    bound_violation = std::max({bound_violation, lower[i] - x[i], x[i] - upper[i]});
    // z > 0 pushes against the upper bound, z < 0 against the lower bound.
    if (z[i] > 0.0) {
      comp = std::max(comp, upper[i] >= kInfinity ? z[i] : z[i] * std::abs(upper[i] - x[i]));
    } else if (z[i] < 0.0) {
      comp = std::max(comp, lower[i] <= -kInfinity ? -z[i] : -z[i] * std::abs(x[i] - lower[i]));
    }
  }
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    comp = std::max(comp, std::abs(mu[i] * e.ineq[i]));
    comp = std::max(comp, -mu[i]);
  }
  k.feasibility = std::max(violation_inf(e.eq, e.ineq), bound_violation);
  k.complementarity = comp;
  return k;
}

}  // namespace

void NlpProblem::validate() const {
  const auto n = static_cast<Eigen::Index>(num_variables);
  if (initial_guess.size() != n || lower.size() != n || upper.size() != n) {
    throw std::invalid_argument("NlpProblem: initial guess and bounds must have num_variables entries");
  }
  if (!(lower.array() <= upper.array()).all()) throw std::invalid_argument("NlpProblem: lower > upper");
  if (!residual && !objective) throw std::invalid_argument("NlpProblem: no objective");
  if (residual && !residual_jacobian) throw std::invalid_argument("NlpProblem: residual without Jacobian");
  if (!residual && !gradient) throw std::invalid_argument("NlpProblem: objective without gradient");
  if (static_cast<bool>(equality) != static_cast<bool>(equality_jacobian)) {
    throw std::invalid_argument("NlpProblem: equality callbacks must come in pairs");
  }
  if (static_cast<bool>(inequality) != static_cast<bool>(inequality_jacobian)) {
    throw std::invalid_argument("NlpProblem: inequality callbacks must come in pairs");
  }
}

std::string to_string(SqpStatus status) {
  switch (status) {
    case SqpStatus::kConverged:
      return "converged";
    case SqpStatus::kMaxIterations:
      return "max-iter";
    case SqpStatus::kLineSearchFailed:
      return "line-search-failed";
    case SqpStatus::kSubproblemFailed:
      return "subproblem-failed";
    case SqpStatus::kNumericalError:
      return "numerical-error";
  }
  return "unknown";
}

SqpStep solve_stacked_subproblem(const SqpSubproblem& sub, const SqpSettings& settings) {
  const int n = static_cast<int>(sub.gradient.size());
  const int ne = static_cast<int>(sub.eq_value.size());
  const int ni = static_cast<int>(sub.ineq_value.size());

  std::vector<int> bounded;
  for (int i = 0; i < n; ++i) {
    if (sub.step_lower[i] > -kInfinity || sub.step_upper[i] < kInfinity) bounded.push_back(i);
  }
  const int nb = static_cast<int>(bounded.size());

  auto build = [&](bool elastic) {
    const int ns = elastic ? 2 * ne + ni : 0;
    const int nv = n + ns;
    const int rows = ne + ni + nb + ns;
    qp::QpProblem prob;
    std::vector<Triplet> trip;
    append(trip, sub.hessian, 0, 0);
    for (int i = 0; i < n; ++i) trip.emplace_back(i, i, settings.hessian_regularization);
    prob.P.resize(nv, nv);
    prob.P.setFromTriplets(trip.begin(), trip.end());
    prob.q = Vector::Zero(nv);
    prob.q.head(n) = sub.gradient;
    if (elastic) prob.q.tail(ns).setConstant(settings.elastic_weight);

    trip.clear();
    append(trip, sub.eq_jacobian, 0, 0);
    append(trip, sub.ineq_jacobian, ne, 0);
    for (int k = 0; k < nb; ++k) trip.emplace_back(ne + ni + k, bounded[k], 1.0);
    if (elastic) {
      for (int i = 0; i < ne; ++i) {
        trip.emplace_back(i, n + i, -1.0);
        trip.emplace_back(i, n + ne + i, 1.0);
      }
      for (int i = 0; i < ni; ++i) trip.emplace_back(ne + i, n + 2 * ne + i, -1.0);
      for (int s = 0; s < ns; ++s) trip.emplace_back(ne + ni + nb + s, n + s, 1.0);
    }
    prob.A.resize(rows, nv);
    prob.A.setFromTriplets(trip.begin(), trip.end());
    prob.l.resize(rows);
    prob.u.resize(rows);
    prob.l.head(ne) = -sub.eq_value;
    prob.u.head(ne) = -sub.eq_value;
    prob.l.segment(ne, ni).setConstant(-kInfinity);
    prob.u.segment(ne, ni) = -sub.ineq_value;
    for (int k = 0; k < nb; ++k) {
      prob.l[ne + ni + k] = std::max(sub.step_lower[bounded[k]], -kInfinity);
      prob.u[ne + ni + k] = std::min(sub.step_upper[bounded[k]], kInfinity);
    }
    if (ns) {
      prob.l.tail(ns).setZero();
      prob.u.tail(ns).setConstant(kInfinity);
    }
    return prob;
  };

  auto unpack = [&](const qp::QpSolution& sol, bool elastic) {
    SqpStep step;
    step.step = sol.x.head(n);
    step.eq_multipliers = sol.y.head(ne);
    step.ineq_multipliers = sol.y.segment(ne, ni);
    step.bound_multipliers = Vector::Zero(n);
    for (int k = 0; k < nb; ++k) step.bound_multipliers[bounded[k]] = sol.y[ne + ni + k];
    step.status = sol.status;
    step.qp_iterations = sol.iterations;
    step.elastic = elastic;
    return step;
  };

  const qp::QpSolution sol = qp::solve(build(false), settings.qp);
  if (sol.status == qp::QpStatus::kSolved) return unpack(sol, false);
  const bool infeasible = sol.status == qp::QpStatus::kPrimalInfeasible ||
                          (sol.status == qp::QpStatus::kMaxIterations && sol.primal_residual > 1e-6);
  if (!infeasible && sol.x.size() == n) return unpack(sol, false);

  const qp::QpSolution relaxed = qp::solve(build(true), settings.qp);
  SqpStep step = unpack(relaxed, true);
  step.qp_iterations += sol.iterations;
  return step;
}

SqpResult solve_nlp(const NlpProblem& problem, const SqpSettings& settings,
                    const std::optional<SqpResult>& warm) {
  problem.validate();
  const int n = problem.num_variables;
  const Evaluator eval(problem);

  SqpResult result;
  Vector x = (warm && warm->x.size() == n ? warm->x : problem.initial_guess)
                 .cwiseMax(problem.lower)
                 .cwiseMin(problem.upper);
  Evaluation e = eval.full(x);
  const int ne = static_cast<int>(e.eq.size());
  const int ni = static_cast<int>(e.ineq.size());

  Vector lam = Vector::Zero(ne), mu = Vector::Zero(ni), z = Vector::Zero(n);
  if (warm) {
    if (warm->eq_multipliers.size() == ne) lam = warm->eq_multipliers;
    if (warm->ineq_multipliers.size() == ni) mu = warm->ineq_multipliers;
    if (warm->bound_multipliers.size() == n) z = warm->bound_multipliers;
  }

  const bool least_squares = problem.is_least_squares();
  MatrixXd bfgs;
  if (!least_squares) bfgs = MatrixXd::Identity(n, n);
  bool bfgs_scaled = false;

  double penalty = settings.initial_penalty;
  auto finish = [&](SqpStatus status) {
    result.status = status;
    result.x = x;
    result.eq_multipliers = lam;
    result.ineq_multipliers = mu;
    result.bound_multipliers = z;
    result.objective = e.objective;
    result.kkt = kkt_residuals(e, x, problem.lower, problem.upper, lam, mu, z);
    return result;
  };

  auto converged = [&](const KktResiduals& k) {
    const double scale = std::max(1.0, inf_norm(e.gradient));
    return k.stationarity <= settings.tol * scale && k.feasibility <= settings.tol &&
           k.complementarity <= settings.tol * scale;
  };

  for (int it = 0;; ++it) {
    if (!std::isfinite(e.objective) || !e.gradient.allFinite() || !e.eq.allFinite() ||
        !e.ineq.allFinite()) {
      return finish(SqpStatus::kNumericalError);
    }
    if (converged(kkt_residuals(e, x, problem.lower, problem.upper, lam, mu, z))) {
      return finish(SqpStatus::kConverged);
    }
    if (it >= settings.max_iter) return finish(SqpStatus::kMaxIterations);
    result.iterations = it + 1;

    SparseMatrix hessian;
    if (least_squares) {
      hessian = e.hessian;
    } else {
      hessian = bfgs.sparseView();
    }
    const Vector step_lower = problem.lower - x;
    const Vector step_upper = problem.upper - x;
    const SqpSubproblem sub{hessian, e.gradient, e.eq_jac, e.eq, e.ineq_jac, e.ineq, step_lower, step_upper};
    SqpStep step = settings.subproblem ? settings.subproblem(sub) : solve_stacked_subproblem(sub, settings);
    result.qp_iterations += step.qp_iterations;
    if (step.step.size() != n || !step.step.allFinite()) return finish(SqpStatus::kSubproblemFailed);
    if (step.status == qp::QpStatus::kPrimalInfeasible || step.status == qp::QpStatus::kDualInfeasible) {
      return finish(SqpStatus::kSubproblemFailed);
    }
    const Vector& d = step.step;

    const double mult_norm = std::max(inf_norm(step.eq_multipliers), inf_norm(step.ineq_multipliers));
    penalty = std::max(penalty, settings.penalty_margin * mult_norm);

    const double viol0 = violation_l1(e.eq, e.ineq);
    const double merit0 = e.objective + penalty * viol0;
    const double directional = std::min(e.gradient.dot(d) - penalty * viol0, 0.0);

    double alpha = 1.0;
    Vector x_trial;
    double merit_trial = 0.0;
    bool accepted = false;
    while (alpha >= settings.min_step) {
      x_trial = (x + alpha * d).cwiseMax(problem.lower).cwiseMin(problem.upper);
      merit_trial = eval.objective(x_trial) + penalty * violation_l1(eval.eq(x_trial), eval.ineq(x_trial));
      if (std::isfinite(merit_trial) && merit_trial <= merit0 + settings.armijo * alpha * directional) {
        accepted = true;
        break;
      }
      alpha *= settings.backtrack;
    }
    if (!accepted) {
      // A vanishing step at a feasible point is a stationary point of the
      // linearization; report convergence rather than a failed search.
      if (inf_norm(d) <= settings.tol * std::max(1.0, inf_norm(x)) &&
          violation_inf(e.eq, e.ineq) <= settings.tol) {
        lam = step.eq_multipliers;
        mu = step.ineq_multipliers;
        z = step.bound_multipliers;
        return finish(SqpStatus::kConverged);
      }
      return finish(SqpStatus::kLineSearchFailed);
    }

    result.merit_history.push_back(merit0);
    result.merit_decrease.push_back(merit0 - merit_trial);

    const Vector x_prev = x;
    const Vector grad_prev = e.gradient;
    const SparseMatrix eq_jac_prev = e.eq_jac;
    const SparseMatrix ineq_jac_prev = e.ineq_jac;

    x = x_trial;
    lam += alpha * (step.eq_multipliers - lam);
    mu += alpha * (step.ineq_multipliers - mu);
    z += alpha * (step.bound_multipliers - z);
    e = eval.full(x);

    if (!least_squares) {
      const Vector s = x - x_prev;
      Vector y = e.gradient - grad_prev;
      if (ne) y += (e.eq_jac - eq_jac_prev).transpose() * lam;
      if (ni) y += (e.ineq_jac - ineq_jac_prev).transpose() * mu;
      const double sy = s.dot(y);
      if (!bfgs_scaled && sy > 0.0) {
        bfgs = MatrixXd::Identity(n, n) * (y.squaredNorm() / sy);
        bfgs_scaled = true;
      }
      const Vector bs = bfgs * s;
      const double sbs = s.dot(bs);
      if (sbs > 1e-300) {
        Vector r = y;
        if (sy < 0.2 * sbs) {
          const double theta = 0.8 * sbs / (sbs - sy);
          r = theta * y + (1.0 - theta) * bs;
        }
        bfgs += -(bs * bs.transpose()) / sbs + (r * r.transpose()) / s.dot(r);
      }
    }

    const double step_norm = alpha * inf_norm(d);
    if (step_norm <= settings.tol * std::max(1.0, inf_norm(x)) &&
        violation_inf(e.eq, e.ineq) <= settings.tol) {
      return finish(SqpStatus::kConverged);
    }
  }
}

}  // namespace lqmhpe::nlp
