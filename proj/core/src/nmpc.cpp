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

#include "lqmhpe/nmpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "lqmhpe/derivatives.hpp"
#include "lqmhpe/dual.hpp"
#include "matrix_util.hpp"

namespace lqmhpe {

namespace {

constexpr int kNx = kStateDim;
constexpr int kNu = kInputDim;
constexpr int kStageVars = kNx + kNu;

using Vector = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;
using MatXX = Eigen::Matrix<double, kNx, kNx>;
using MatXU = Eigen::Matrix<double, kNx, kNu>;
using MatUU = Eigen::Matrix<double, kNu, kNu>;

using detail::is_psd;
using detail::symmetric_sqrt;

// Reference with its quaternion moved into the hemisphere of x.
StateVector aligned_reference(const StateVector& x, const StateVector& ref) {
  StateVector r = ref;
  if (x.segment<4>(kQuat).dot(ref.segment<4>(kQuat)) < 0.0) r.segment<4>(kQuat) *= -1.0;
  return r;
}

StateVector model_step(const StateVector& x, const InputVector& u, const ParamVector& vt,
                       const NmpcConfig& cfg) {
  return affine_rk4_kernel<double>(x, u, vt, cfg.gravity, cfg.dt);
}

void append_block(std::vector<Triplet>& trip, int row, int col, const Eigen::MatrixXd& m) {
  for (int j = 0; j < m.cols(); ++j) {
    for (int i = 0; i < m.rows(); ++i) {
      if (m(i, j) != 0.0) trip.emplace_back(row + i, col + j, m(i, j));
    }
  }
}

}  // namespace

NmpcConfig NmpcConfig::defaults(const ModelSpec& model) {
  NmpcConfig cfg;
  Eigen::Matrix<double, kStateDim, 1> q;
  // The attitude block is heavier than the position block so that inverted
  // starts flip before climbing instead of settling into zero-thrust free fall.
  q << 10.0, 10.0, 10.0, 100.0, 100.0, 100.0, 100.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0;
  cfg.Q = q.asDiagonal();
  cfg.Qf = 10.0 * cfg.Q;
  cfg.R = 0.1 * InputWeight::Identity();
  cfg.x_ref = hover_state();
  cfg.u_ref = InputVector::Constant(model.hover_thrust());
  cfg.u_max = model.max_thrust;
  cfg.gravity = model.gravity;
  // Two SQP iterations per control step from a shifted warm start.
  cfg.sqp.tol = 1e-5;
  cfg.sqp.max_iter = 2;
  cfg.sqp.qp = qp::settings_with_tolerance(1e-5, 4000);
  return cfg;
}

void NmpcConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("NmpcConfig: horizon must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("NmpcConfig: dt must be positive");
  if (!is_psd(Q) || !is_psd(Qf)) throw std::invalid_argument("NmpcConfig: Q and Qf must be symmetric PSD");
  if (!is_psd(R)) throw std::invalid_argument("NmpcConfig: R must be symmetric PSD");
  if (!(u_min <= u_max) || !(u_max > 0.0)) throw std::invalid_argument("NmpcConfig: invalid input bounds");
}

InputVector hover_input(const ParamVector& vartheta, const Eigen::Vector3d& gravity) {
  return InputVector::Constant(hover_thrust(implied_mass(vartheta), gravity));
}

nlp::NlpProblem build_nmpc_problem(const StateVector& x0, const ParamVector& vartheta,
                                   const NmpcConfig& cfg, const Eigen::VectorXd& initial_guess) {
  const ShootingLayout layout{cfg.horizon};
  const int n = layout.num_variables();
  const int horizon = cfg.horizon;
  if (initial_guess.size() != n) throw std::invalid_argument("build_nmpc_problem: bad initial guess size");

  const StateWeight q_sqrt = symmetric_sqrt<kNx>(cfg.Q);
  const StateWeight qf_sqrt = symmetric_sqrt<kNx>(cfg.Qf);
  const InputWeight r_sqrt = symmetric_sqrt<kNu>(cfg.R);

  nlp::NlpProblem prob;
  prob.num_variables = n;
  prob.initial_guess = initial_guess;
  prob.lower = Vector::Constant(n, -qp::kInfinity);
  prob.upper = Vector::Constant(n, qp::kInfinity);
  for (int i = 0; i < horizon; ++i) {
    prob.lower.segment<kNu>(layout.input(i)).setConstant(cfg.u_min);
    prob.upper.segment<kNu>(layout.input(i)).setConstant(cfg.u_max);
  }

  // Residual r = [Qs (x_i - xref); Rs (u_i - uref)]_i ; Qfs (x_N - xref).
  std::vector<Triplet> trip;
  for (int i = 0; i < horizon; ++i) {
    append_block(trip, layout.state(i), layout.state(i), q_sqrt);
    append_block(trip, layout.input(i), layout.input(i), r_sqrt);
  }
  append_block(trip, layout.state(horizon), layout.state(horizon), qf_sqrt);
  auto residual_jac = std::make_shared<nlp::SparseMatrix>(n, n);
  residual_jac->setFromTriplets(trip.begin(), trip.end());

  const StateVector x_ref = cfg.x_ref;
  const InputVector u_ref = cfg.u_ref;
  prob.residual = [=](const Vector& z) {
    Vector r(n);
    for (int i = 0; i <= horizon; ++i) {
      const StateVector x = z.segment<kNx>(layout.state(i));
      const StateWeight& w = i == horizon ? qf_sqrt : q_sqrt;
      r.segment<kNx>(layout.state(i)) = w * (x - aligned_reference(x, x_ref));
      if (i < horizon) r.segment<kNu>(layout.input(i)) = r_sqrt * (z.segment<kNu>(layout.input(i)) - u_ref);
    }
    return r;
  };
  prob.residual_jacobian = [residual_jac](const Vector&) { return *residual_jac; };

  prob.equality = [=](const Vector& z) {
    Vector c(layout.num_defects());
    c.head<kNx>() = z.head<kNx>() - x0;
    for (int i = 0; i < horizon; ++i) {
      const StateVector x = z.segment<kNx>(layout.state(i));
      const InputVector u = z.segment<kNu>(layout.input(i));
      c.segment<kNx>(kNx * (i + 1)) = model_step(x, u, vartheta, cfg) - z.segment<kNx>(layout.state(i + 1));
    }
    return c;
  };

  prob.equality_jacobian = [=](const Vector& z) {
    using D = Dual<kStageVars>;
    const ParamVec<D> vt = vartheta.cast<D>();
    std::vector<Triplet> jt;
    jt.reserve(static_cast<size_t>(horizon) * kNx * (kStageVars + 1) + kNx);
    for (int r = 0; r < kNx; ++r) jt.emplace_back(r, r, 1.0);
    for (int i = 0; i < horizon; ++i) {
      const Eigen::Matrix<double, kStageVars, 1> xu = z.segment<kStageVars>(layout.state(i));
      const Eigen::Matrix<D, kStageVars, 1> s = nlp::seed<kStageVars>(xu);
      const StateVec<D> x = s.head<kNx>();
      const InputVec<D> u = s.tail<kNu>();
      const StateVec<D> next = affine_rk4_kernel<D>(x, u, vt, cfg.gravity, cfg.dt);
      const int row = kNx * (i + 1);
      for (int r = 0; r < kNx; ++r) {
        for (int j = 0; j < kStageVars; ++j) {
          if (next[r].grad[j] != 0.0) jt.emplace_back(row + r, layout.state(i) + j, next[r].grad[j]);
        }
        jt.emplace_back(row + r, layout.state(i + 1) + r, -1.0);
      }
    }
    nlp::SparseMatrix jac(layout.num_defects(), n);
    jac.setFromTriplets(jt.begin(), jt.end());
    return jac;
  };
  return prob;
}

nlp::SqpStep solve_condensed_subproblem(const nlp::SqpSubproblem& sub, const ShootingLayout& layout,
                                        const qp::QpSettings& settings) {
  const int horizon = layout.horizon;
  const int n = layout.num_variables();
  const int nu_total = horizon * kNu;

  std::vector<MatXX> a(horizon, MatXX::Zero()), hx(horizon + 1, MatXX::Zero());
  std::vector<MatXU> b(horizon, MatXU::Zero());
  std::vector<MatUU> hu(horizon, MatUU::Zero());

  // Locates variable j as (stage, offset within stage, is_state).
  auto locate = [&](int j, int& stage, int& off) {
    stage = std::min(j / kStageVars, horizon);
    off = j - stage * kStageVars;
  };

  for (int j = 0; j < n; ++j) {
    int stage = 0, off = 0;
    locate(j, stage, off);
    for (nlp::SparseMatrix::InnerIterator it(sub.eq_jacobian, j); it; ++it) {
      const int block = static_cast<int>(it.row()) / kNx;
      const int r = static_cast<int>(it.row()) % kNx;
      if (block == 0 || block - 1 != stage) continue;
      if (off < kNx) {
        a[stage](r, off) = it.value();
      } else {
        b[stage](r, off - kNx) = it.value();
      }
    }
    for (nlp::SparseMatrix::InnerIterator it(sub.hessian, j); it; ++it) {
      int rs = 0, ro = 0;
      locate(static_cast<int>(it.row()), rs, ro);
      if (rs != stage) continue;
      if (off < kNx && ro < kNx) {
        hx[stage](ro, off) = it.value();
      } else if (off >= kNx && ro >= kNx) {
        hu[stage](ro - kNx, off - kNx) = it.value();
      }
    }
  }

  auto gx = [&](int k) { return sub.gradient.segment<kNx>(layout.state(k)); };
  auto gu = [&](int k) { return sub.gradient.segment<kNu>(layout.input(k)); };
  auto defect = [&](int k) { return sub.eq_value.segment<kNx>(kNx * (k + 1)); };

  // Free response (zero input step).
  std::vector<StateVector> s(horizon + 1);
  s[0] = -sub.eq_value.head<kNx>();
  for (int k = 0; k < horizon; ++k) s[k + 1] = a[k] * s[k] + defect(k);

  std::vector<StateVector> lam(horizon + 1);
  lam[horizon] = hx[horizon] * s[horizon] + gx(horizon);
  for (int k = horizon - 1; k >= 1; --k) lam[k] = hx[k] * s[k] + gx(k) + a[k].transpose() * lam[k + 1];

  Eigen::MatrixXd hc = Eigen::MatrixXd::Zero(nu_total, nu_total);
  Vector gc(nu_total);
  for (int j = 0; j < horizon; ++j) gc.segment<kNu>(kNu * j) = gu(j) + b[j].transpose() * lam[j + 1];

  std::vector<MatXU> g(horizon + 1), y(horizon + 1);
  for (int l = 0; l < horizon; ++l) {
    g[l + 1] = b[l];
    for (int k = l + 1; k < horizon; ++k) g[k + 1] = a[k] * g[k];
    y[horizon] = hx[horizon] * g[horizon];
    for (int k = horizon - 1; k >= l + 1; --k) y[k] = hx[k] * g[k] + a[k].transpose() * y[k + 1];
    hc.block<kNu, kNu>(kNu * l, kNu * l) += hu[l];
    for (int j = l; j < horizon; ++j) {
      const MatUU blk = b[j].transpose() * y[j + 1];
      hc.block<kNu, kNu>(kNu * j, kNu * l) += blk;
      if (j != l) hc.block<kNu, kNu>(kNu * l, kNu * j) += blk.transpose();
    }
  }
  hc = (0.5 * (hc + hc.transpose())).eval();

  qp::QpProblem prob;
  prob.P = hc.sparseView();
  prob.q = gc;
  prob.A.resize(nu_total, nu_total);
  prob.A.setIdentity();
  prob.l.resize(nu_total);
  prob.u.resize(nu_total);
  for (int k = 0; k < horizon; ++k) {
    prob.l.segment<kNu>(kNu * k) = sub.step_lower.segment<kNu>(layout.input(k));
    prob.u.segment<kNu>(kNu * k) = sub.step_upper.segment<kNu>(layout.input(k));
  }
  const qp::QpSolution sol = qp::solve(prob, settings);

  nlp::SqpStep step;
  step.status = sol.status;
  step.qp_iterations = sol.iterations;
  step.step = Vector::Zero(n);
  step.bound_multipliers = Vector::Zero(n);
  step.eq_multipliers = Vector::Zero(layout.num_defects());
  step.ineq_multipliers = Vector::Zero(sub.ineq_value.size());

  std::vector<StateVector> dx(horizon + 1);
  dx[0] = s[0];
  for (int k = 0; k < horizon; ++k) {
    const InputVector du = sol.x.segment<kNu>(kNu * k);
    dx[k + 1] = a[k] * dx[k] + b[k] * du + defect(k);
    step.step.segment<kNu>(layout.input(k)) = du;
    step.bound_multipliers.segment<kNu>(layout.input(k)) = sol.y.segment<kNu>(kNu * k);
  }
  for (int k = 0; k <= horizon; ++k) step.step.segment<kNx>(layout.state(k)) = dx[k];

  // Defect multipliers from stationarity in the state blocks.
  StateVector nu = hx[horizon] * dx[horizon] + gx(horizon);
  step.eq_multipliers.segment<kNx>(kNx * horizon) = nu;
  for (int k = horizon - 1; k >= 1; --k) {
    nu = hx[k] * dx[k] + gx(k) + a[k].transpose() * nu;
    step.eq_multipliers.segment<kNx>(kNx * k) = nu;
  }
  step.eq_multipliers.head<kNx>() = -(hx[0] * dx[0] + gx(0) + a[0].transpose() * nu);
  return step;
}

PlannedTrajectory shift_plan(const PlannedTrajectory& prev, const ParamVector& vartheta,
                             const NmpcConfig& cfg) {
  PlannedTrajectory out = prev;
  const int horizon = static_cast<int>(prev.inputs.size());
  if (horizon == 0) return out;
  for (int i = 0; i < horizon; ++i) out.states[i] = prev.states[i + 1];
  for (int i = 0; i + 1 < horizon; ++i) out.inputs[i] = prev.inputs[i + 1];
  out.inputs[horizon - 1] = prev.inputs[horizon - 1];
  out.states[horizon] = model_step(out.states[horizon - 1], out.inputs[horizon - 1], vartheta, cfg);
  return out;
}

PlannedTrajectory plan(const StateVector& x0, const ParamVector& vartheta, const NmpcConfig& cfg,
                       const std::optional<PlannedTrajectory>& warm) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const ShootingLayout layout{cfg.horizon};
  const int horizon = cfg.horizon;

  PlannedTrajectory guess;
  const bool usable_warm = warm && static_cast<int>(warm->inputs.size()) == horizon &&
                           static_cast<int>(warm->states.size()) == horizon + 1;
  if (usable_warm) {
    guess = shift_plan(*warm, vartheta, cfg);
  } else {
    const InputVector u = cfg.u_ref.cwiseMax(cfg.u_min).cwiseMin(cfg.u_max);
    guess.states.assign(horizon + 1, x0);
    guess.inputs.assign(horizon, u);
    for (int i = 0; i < horizon; ++i) guess.states[i + 1] = model_step(guess.states[i], u, vartheta, cfg);
  }
  guess.states[0] = x0;

  Vector z0(layout.num_variables());
  for (int i = 0; i <= horizon; ++i) {
    z0.segment<kNx>(layout.state(i)) = guess.states[i];
    if (i < horizon) z0.segment<kNu>(layout.input(i)) = guess.inputs[i].cwiseMax(cfg.u_min).cwiseMin(cfg.u_max);
  }

  const nlp::NlpProblem prob = build_nmpc_problem(x0, vartheta, cfg, z0);
  nlp::SqpSettings settings = cfg.sqp;
  settings.subproblem = [&](const nlp::SqpSubproblem& sub) {
    return solve_condensed_subproblem(sub, layout, cfg.sqp.qp);
  };
  const nlp::SqpResult res = nlp::solve_nlp(prob, settings);

  PlannedTrajectory out;
  out.status = res.status;
  out.iterations = res.iterations;
  out.qp_iterations = res.qp_iterations;
  const bool failed = !res.x.allFinite() || res.status == nlp::SqpStatus::kNumericalError ||
                      res.status == nlp::SqpStatus::kSubproblemFailed;
  if (failed) {
    out = guess;
    out.status = res.status;
    out.iterations = res.iterations;
    out.qp_iterations = res.qp_iterations;
    out.fallback = true;
    out.objective = std::numeric_limits<double>::quiet_NaN();
    out.max_defect = std::numeric_limits<double>::quiet_NaN();
  } else {
    out.states.resize(horizon + 1);
    out.inputs.resize(horizon);
    for (int i = 0; i <= horizon; ++i) {
      out.states[i] = res.x.segment<kNx>(layout.state(i));
      if (i < horizon) out.inputs[i] = res.x.segment<kNu>(layout.input(i));
    }
    out.objective = res.objective;
    out.max_defect = prob.equality(res.x).lpNorm<Eigen::Infinity>();
  }
  out.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

PlannedTrajectory plan(const StateVector& x0, const NominalParams& theta, const NmpcConfig& cfg,
                       const std::optional<PlannedTrajectory>& warm) {
  return plan(x0, relax(theta).to_vector(), cfg, warm);
}

InputVector apply_first(const PlannedTrajectory& plan, const NmpcConfig& cfg) {
  if (plan.inputs.empty()) throw std::invalid_argument("apply_first: empty plan");
  return plan.inputs.front().cwiseMax(cfg.u_min).cwiseMin(cfg.u_max);
}

}  // namespace lqmhpe
