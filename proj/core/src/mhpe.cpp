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

#include "lqmhpe/mhpe.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "lqmhpe/derivatives.hpp"
#include "lqmhpe/dual.hpp"
#include "lqmhpe/dynamics.hpp"
#include "matrix_util.hpp"

namespace lqmhpe {

namespace {

constexpr int kNx = kStateDim;
constexpr int kNp = kParamDim;

using Vector = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_full(const HorizonWindow& window, const char* who) {
  if (!window.full()) throw std::invalid_argument(std::string(who) + ": window is not full");
}

// Parameter-free part of the Euler defect: (x_{j+1} - x_j)/dt - F(x_j) - w_j.
StateVector euler_target(const HorizonWindow& window, int j, const Eigen::Vector3d& gravity) {
  const StateVector& x = window.states()[j];
  const StateVector& next = window.states()[j + 1];
  return (next - x) / window.dt() - drift(x, gravity) - window.disturbances()[j];
}

// Per-entry scale used to condition the nonlinear problem.
ParamVector variable_scale(const ParamVector& prior) {
  ParamVector s = prior.cwiseAbs();
  for (int i = 0; i < kNp; ++i) {
    if (!(s[i] > 0.0) || !std::isfinite(s[i])) s[i] = 1.0;
  }
  return s;
}

StateVector rk4_prediction(const HorizonWindow& window, int j, const ParamVector& theta,
                           const Eigen::Vector3d& gravity) {
  return rk4_kernel<double>(window.states()[j], window.inputs()[j], theta, gravity, window.dt());
}

}  // namespace

// ---------------------------------------------------------------- window

HorizonWindow::HorizonWindow(int horizon, double dt) : horizon_(horizon), dt_(dt) {
  if (horizon < 1) throw std::invalid_argument("HorizonWindow: horizon must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("HorizonWindow: dt must be positive");
}

void HorizonWindow::start(const StateVector& x) {
  reset();
  states_.push_back(x);
}

void HorizonWindow::reset() {
  states_.clear();
  inputs_.clear();
  disturbances_.clear();
}

void HorizonWindow::push_step(const InputVector& u, const Disturbance& w, const StateVector& next) {
  if (!started()) throw std::logic_error("HorizonWindow: push_step before start");
  states_.push_back(next);
  inputs_.push_back(u);
  disturbances_.push_back(w);
  if (size() > horizon_) {
    states_.pop_front();
    inputs_.pop_front();
    disturbances_.pop_front();
  }
}

// ---------------------------------------------------------------- tuning

ParamWeight tuning_weights(const ParamVector& nominal) {
  ParamWeight p = ParamWeight::Zero();
  for (int i = 0; i < kNp; ++i) {
    const double a = std::abs(nominal[i]);
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw std::invalid_argument("tuning_weights: entry " + std::to_string(i) +
                                  " is zero or non-finite");
    }
    p(i, i) = std::pow(10.0, -std::floor(std::log10(a)));
  }
  return p;
}

nlp::SqpSettings EstimatorSettings::default_sqp() {
  nlp::SqpSettings s;
  s.tol = 1e-8;
  s.max_iter = 50;
  s.qp = qp::settings_with_tolerance(1e-8, 10000);
  return s;
}

void EstimatorState::validate() const {
  box.validate();
  if (!detail::is_psd<kNp>(weight)) {
    throw std::invalid_argument("EstimatorState: weight must be symmetric PSD");
  }
  if (!box.contains(prior, 1e-12 * std::max(1.0, prior.cwiseAbs().maxCoeff()))) {
    throw std::invalid_argument("EstimatorState: prior lies outside the parameter box");
  }
}

EstimatorState nonlinear_estimator_state(const NominalParams& theta0, double lower_factor,
                                         double upper_factor) {
  theta0.validate();
  EstimatorState st;
  st.prior = theta0.to_vector();
  st.weight = tuning_weights(st.prior);
  st.box = scaled_box(theta0, lower_factor, upper_factor);
  return st;
}

EstimatorState lq_estimator_state(const NominalParams& theta0, double lower_factor,
                                  double upper_factor) {
  EstimatorState st;
  st.prior = relax(theta0).to_vector();
  st.weight = tuning_weights(st.prior);
  st.box = transform_bounds(scaled_box(theta0, lower_factor, upper_factor));
  return st;
}

std::string to_string(EstimateStatus status) {
  switch (status) {
    case EstimateStatus::kSolved:
      return "solved";
    case EstimateStatus::kNotReady:
      return "not-ready";
    case EstimateStatus::kFailed:
      return "failed";
  }
  return "unknown";
}

// ---------------------------------------------------------------- LQ-MHPE

double lq_objective(const HorizonWindow& window, const EstimatorState& state,
                    const ParamVector& vartheta, const EstimatorSettings& settings) {
  const ParamVector d = vartheta - state.prior;
  double cost = d.dot(state.weight * d);
  for (int j = 0; j < window.size(); ++j) {
    StateVector e = euler_target(window, j, settings.gravity) -
                    input_matrix(window.states()[j], window.inputs()[j]) * vartheta;
    if (!settings.include_quaternion_rows) e.segment<4>(kQuat).setZero();
    cost += settings.disturbance_weight * e.squaredNorm();
  }
  return cost;
}

qp::QpProblem build_lq_problem(const HorizonWindow& window, const EstimatorState& state,
                               const EstimatorSettings& settings) {
  require_full(window, "build_lq_problem");
  const int m = window.size();
  const int n = kNp + kNx * m;
  const double rho = settings.disturbance_weight;
  const double dt = window.dt();
  auto slack = [&](int j) { return kNp + kNx * j; };

  std::vector<Triplet> p_trip;
  for (int i = 0; i < kNp; ++i) {
    for (int k = 0; k < kNp; ++k) {
      if (state.weight(i, k) != 0.0) p_trip.emplace_back(i, k, 2.0 * state.weight(i, k));
    }
  }
  for (int i = kNp; i < n; ++i) p_trip.emplace_back(i, i, 2.0 * rho);

  Vector q(n);
  q.head(kNp) = -2.0 * state.weight * state.prior;
  for (int j = 0; j < m; ++j) q.segment(slack(j), kNx) = -2.0 * rho * window.disturbances()[j];

  // dt G_j vartheta + dt w~_j = x_{j+1} - x_j - dt F(x_j)
  std::vector<int> rows;
  for (int r = 0; r < kNx; ++r) {
    if (!settings.include_quaternion_rows && r >= kQuat && r < kQuat + 4) continue;
    rows.push_back(r);
  }
  const int ne = m * static_cast<int>(rows.size());
  std::vector<Triplet> a_trip;
  Vector lo(ne + kNp), hi(ne + kNp);
  int row = 0;
  for (int j = 0; j < m; ++j) {
    const StateVector& x = window.states()[j];
    const Eigen::Matrix<double, kNx, kNp> gj = input_matrix(x, window.inputs()[j]);
    const StateVector rhs = window.states()[j + 1] - x - dt * drift(x, settings.gravity);
    for (int r : rows) {
      for (int k = 0; k < kNp; ++k) {
        if (gj(r, k) != 0.0) a_trip.emplace_back(row, k, dt * gj(r, k));
      }
      a_trip.emplace_back(row, slack(j) + r, dt);
      lo[row] = hi[row] = rhs[r];
      ++row;
    }
  }
  for (int k = 0; k < kNp; ++k) a_trip.emplace_back(ne + k, k, 1.0);
  lo.tail(kNp) = state.box.lower;
  hi.tail(kNp) = state.box.upper;

  qp::QpProblem prob;
  prob.P.resize(n, n);
  prob.P.setFromTriplets(p_trip.begin(), p_trip.end());
  prob.q = q;
  prob.A.resize(ne + kNp, n);
  prob.A.setFromTriplets(a_trip.begin(), a_trip.end());
  prob.l = lo;
  prob.u = hi;
  return prob;
}

Estimate estimate_lq(const HorizonWindow& window, const EstimatorState& state,
                     const EstimatorSettings& settings) {
  const auto start = Clock::now();
  Estimate out;
  out.params = state.prior;
  if (!window.full()) {
    out.status = EstimateStatus::kNotReady;
    out.solve_time = seconds_since(start);
    return out;
  }
  const qp::QpProblem prob = build_lq_problem(window, state, settings);
  // Warm start at the prior with the measured disturbances as slacks.
  qp::WarmStart warm;
  warm.x.resize(prob.num_variables());
  warm.x.head<kNp>() = state.prior;
  for (int j = 0; j < window.size(); ++j) warm.x.segment<kNx>(kNp + kNx * j) = window.disturbances()[j];
  const qp::QpSolution sol = qp::solve(prob, settings.qp, warm);
  out.iterations = sol.iterations;
  // Slacks make every window feasible; anything but kSolved is a solver failure.
  if (sol.status != qp::QpStatus::kSolved || !sol.x.allFinite()) {
    out.status = EstimateStatus::kFailed;
    out.objective = lq_objective(window, state, state.prior, settings);
    out.solve_time = seconds_since(start);
    return out;
  }
  out.params = state.box.clamp(sol.x.head<kNp>());
  out.objective = lq_objective(window, state, out.params, settings);
  out.status = EstimateStatus::kSolved;
  out.solve_time = seconds_since(start);
  return out;
}

// ---------------------------------------------------------------- NMHPE

double nonlinear_objective(const HorizonWindow& window, const EstimatorState& state,
                           const ParamVector& theta, const EstimatorSettings& settings) {
  const ParamVector d = theta - state.prior;
  double cost = d.dot(state.weight * d);
  for (int j = 0; j < window.size(); ++j) {
    const StateVector slack =
        (window.states()[j + 1] - rk4_prediction(window, j, theta, settings.gravity)) / window.dt();
    cost += settings.disturbance_weight * (slack - window.disturbances()[j]).squaredNorm();
  }
  return cost;
}

nlp::NlpProblem build_nonlinear_problem(const HorizonWindow& window, const EstimatorState& state,
                                        const EstimatorSettings& settings) {
  require_full(window, "build_nonlinear_problem");
  const int m = window.size();
  const int n = kNp + kNx * m;
  const double dt = window.dt();
  const double rho_sqrt = std::sqrt(settings.disturbance_weight);
  const ParamVector scale = variable_scale(state.prior);
  const ParamWeight p_sqrt = detail::symmetric_sqrt<kNp>(state.weight);
  const Eigen::Vector3d gravity = settings.gravity;
  auto slack = [&](int j) { return kNp + kNx * j; };

  // Copies of the window data so the problem outlives the caller's buffer.
  auto states = std::make_shared<std::vector<StateVector>>(window.states().begin(), window.states().end());
  auto inputs = std::make_shared<std::vector<InputVector>>(window.inputs().begin(), window.inputs().end());
  auto dist = std::make_shared<std::vector<Disturbance>>(window.disturbances().begin(),
                                                         window.disturbances().end());

  nlp::NlpProblem prob;
  prob.num_variables = n;

  // Residual: [sqrt(P) (scale .* s - prior); sqrt(rho) (w~_j - w_j)].
  const ParamVector prior = state.prior;
  prob.residual = [=](const Vector& z) {
    Vector r(n);
    const ParamVector theta = z.head<kNp>().cwiseProduct(scale);
    r.head<kNp>() = p_sqrt * (theta - prior);
    for (int j = 0; j < m; ++j) {
      r.segment<kNx>(slack(j)) = rho_sqrt * (z.segment<kNx>(slack(j)) - (*dist)[j]);
    }
    return r;
  };
  auto res_jac = std::make_shared<nlp::SparseMatrix>(n, n);
  {
    std::vector<Triplet> trip;
    const ParamWeight ps = p_sqrt * scale.asDiagonal();
    for (int i = 0; i < kNp; ++i) {
      for (int k = 0; k < kNp; ++k) {
        if (ps(i, k) != 0.0) trip.emplace_back(i, k, ps(i, k));
      }
    }
    for (int i = kNp; i < n; ++i) trip.emplace_back(i, i, rho_sqrt);
    res_jac->setFromTriplets(trip.begin(), trip.end());
  }
  prob.residual_jacobian = [res_jac](const Vector&) { return *res_jac; };

  // Defects: f_d(x_j, u_j, theta) + dt w~_j - x_{j+1}.
  prob.equality = [=](const Vector& z) {
    Vector c(kNx * m);
    const ParamVector theta = z.head<kNp>().cwiseProduct(scale);
    for (int j = 0; j < m; ++j) {
      c.segment<kNx>(kNx * j) = rk4_kernel<double>((*states)[j], (*inputs)[j], theta, gravity, dt) +
                                dt * z.segment<kNx>(slack(j)) - (*states)[j + 1];
    }
    return c;
  };
  prob.equality_jacobian = [=](const Vector& z) {
    using D = Dual<kNp>;
    const ParamVector s = z.head<kNp>();
    const ParamVec<D> sd = nlp::seed<kNp>(s);
    ParamVec<D> theta;
    for (int i = 0; i < kNp; ++i) theta[i] = sd[i] * scale[i];
    std::vector<Triplet> trip;
    trip.reserve(static_cast<size_t>(m) * kNx * (kNp + 1));
    for (int j = 0; j < m; ++j) {
      const StateVec<D> xd = (*states)[j].cast<D>();
      const InputVec<D> ud = (*inputs)[j].cast<D>();
      const StateVec<D> next = rk4_kernel<D>(xd, ud, theta, gravity, dt);
      for (int r = 0; r < kNx; ++r) {
        for (int k = 0; k < kNp; ++k) {
          const double v = next[r].grad[k];
          if (v != 0.0) trip.emplace_back(kNx * j + r, k, v);
        }
        trip.emplace_back(kNx * j + r, slack(j) + r, dt);
      }
    }
    nlp::SparseMatrix jac(kNx * m, n);
    jac.setFromTriplets(trip.begin(), trip.end());
    return jac;
  };

  prob.lower = Vector::Constant(n, -qp::kInfinity);
  prob.upper = Vector::Constant(n, qp::kInfinity);
  prob.lower.head<kNp>() = state.box.lower.cwiseQuotient(scale);
  prob.upper.head<kNp>() = state.box.upper.cwiseQuotient(scale);

  // Start at the prior with the slacks that make every defect vanish.
  prob.initial_guess.resize(n);
  prob.initial_guess.head<kNp>() = state.prior.cwiseQuotient(scale);
  for (int j = 0; j < m; ++j) {
    prob.initial_guess.segment<kNx>(slack(j)) =
        ((*states)[j + 1] - rk4_kernel<double>((*states)[j], (*inputs)[j], state.prior, gravity, dt)) / dt;
  }
  return prob;
}

Estimate estimate_nonlinear(const HorizonWindow& window, const EstimatorState& state,
                            const EstimatorSettings& settings) {
  const auto start = Clock::now();
  Estimate out;
  out.params = state.prior;
  if (!window.full()) {
    out.status = EstimateStatus::kNotReady;
    out.solve_time = seconds_since(start);
    return out;
  }
  const nlp::NlpProblem prob = build_nonlinear_problem(window, state, settings);
  const nlp::SqpResult res = nlp::solve_nlp(prob, settings.sqp);
  out.iterations = res.iterations;
  if (res.status != nlp::SqpStatus::kConverged || !res.x.allFinite()) {
    out.status = EstimateStatus::kFailed;
    out.objective = nonlinear_objective(window, state, state.prior, settings);
    out.solve_time = seconds_since(start);
    return out;
  }
  const ParamVector scale = variable_scale(state.prior);
  out.params = state.box.clamp(res.x.head<kNp>().cwiseProduct(scale));
  out.objective = nonlinear_objective(window, state, out.params, settings);
  out.status = EstimateStatus::kSolved;
  out.solve_time = seconds_since(start);
  return out;
}

}  // namespace lqmhpe
