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

#include "lqmhpe/validate.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "lqmhpe/derivatives.hpp"
#include "lqmhpe/dual.hpp"
#include "lqmhpe/dynamics.hpp"
#include "lqmhpe/mhpe.hpp"
#include "lqmhpe/monte_carlo.hpp"
#include "lqmhpe/qp_solver.hpp"
#include "lqmhpe/relaxation.hpp"

namespace lqmhpe {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

class Sampler {
 public:
  Sampler(const ModelSpec& spec, std::uint64_t seed)
      : spec_(spec), bounds_(TrialConfig::for_model(spec.name)), rng_(seed) {
    box_ = scaled_box(spec.params, bounds_.param_lower_factor, bounds_.param_upper_factor);
  }

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  StateVector state() {
    StateVector x;
    for (int i = 0; i < 3; ++i) x[kPos + i] = uniform(-bounds_.position_bound, bounds_.position_bound);
    x.segment<4>(kQuat) = uniform_quaternion(uniform(0, 1), uniform(0, 1), uniform(0, 1));
    for (int i = 0; i < 3; ++i) x[kVel + i] = uniform(-bounds_.velocity_bound, bounds_.velocity_bound);
    for (int i = 0; i < 3; ++i) x[kOmega + i] = uniform(-bounds_.rate_bound, bounds_.rate_bound);
    return x;
  }

  InputVector input() {
    InputVector u;
    for (int i = 0; i < kInputDim; ++i) u[i] = uniform(0.0, spec_.max_thrust);
    return u;
  }

  ParamVector theta() {
    ParamVector t;
    for (int i = 0; i < kParamDim; ++i) t[i] = uniform(box_.lower[i], box_.upper[i]);
    return t;
  }

  ParamVector corner() {
    ParamVector t;
    for (int i = 0; i < kParamDim; ++i) t[i] = uniform(0, 1) < 0.5 ? box_.lower[i] : box_.upper[i];
    return t;
  }

  Disturbance disturbance() {
    Disturbance w;
    for (int i = 0; i < kStateDim; ++i) w[i] = uniform(-bounds_.noise_bound, bounds_.noise_bound);
    return w.cwiseProduct(disturbance_mask(DisturbanceChannels::kTranslationalAndRates));
  }

  const ParamBox& box() const { return box_; }
  const ModelSpec& spec() const { return spec_; }

 private:
  ModelSpec spec_;
  TrialConfig bounds_;
  ParamBox box_;
  std::mt19937_64 rng_;
};

CheckResult finish(CheckResult r, Clock::time_point t0) {
  r.passed = std::isfinite(r.worst) && r.worst <= r.threshold;
  r.seconds = seconds_since(t0);
  return r;
}

// Exhaustive active-set solution of min 1/2 x'Px + q'x s.t. Cx <= d for
// strictly convex P. Returns the KKT point with the smallest objective.
Eigen::VectorXd enumerate_active_sets(const Eigen::MatrixXd& P, const Eigen::VectorXd& q,
                                      const Eigen::MatrixXd& C, const Eigen::VectorXd& d) {
  const int n = static_cast<int>(q.size());
  const int m = static_cast<int>(d.size());
  constexpr double kTol = 1e-9;
  Eigen::VectorXd best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    const int k = std::popcount(mask);
    if (k > n) continue;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    kkt.topLeftCorner(n, n) = P;
    rhs.head(n) = -q;
    int row = 0;
    for (int i = 0; i < m; ++i) {
      if (!(mask & (1u << i))) continue;
      kkt.block(n + row, 0, 1, n) = C.row(i);
      kkt.block(0, n + row, n, 1) = C.row(i).transpose();
      rhs[n + row] = d[i];
      ++row;
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd x = sol.head(n);
    if (k > 0 && (sol.tail(k).array() < -kTol).any()) continue;
    if (((C * x - d).array() > kTol).any()) continue;
    const double obj = 0.5 * x.dot(P * x) + q.dot(x);
    if (obj < best_obj) {
      best_obj = obj;
      best = x;
    }
  }
  return best;
}

HorizonWindow self_generated_window(Sampler& s, const ParamVector& params, EstimatorKind kind,
                                    int horizon, double dt) {
  HorizonWindow window(horizon, dt);
  StateVector x = s.state();
  // Keep the window close to the operating envelope.
  x.segment<3>(kPos) *= 0.2;
  window.start(x);
  for (int j = 0; j < horizon; ++j) {
    const InputVector u = s.input();
    const Disturbance w = s.disturbance();
    StateVector next;
    if (kind == EstimatorKind::kLq) {
      next = affine_euler_update(x, u, params, w, dt, s.spec().gravity);
    } else {
      next = rk4_kernel<double>(x, u, params, s.spec().gravity, dt) + dt * w;
    }
    window.push_step(u, w, next);
    x = next;
  }
  return window;
}

}  // namespace

CheckResult check_affine_equivalence(const ModelSpec& spec, int samples, std::uint64_t seed,
                                     bool corrupt_input_matrix) {
  const auto t0 = Clock::now();
  Sampler s(spec, seed);
  CheckResult r;
  r.name = "affine_equivalence/" + spec.name + (corrupt_input_matrix ? "/corrupted" : "");
  r.threshold = 1e-10;
  r.samples = samples;
  for (int k = 0; k < samples; ++k) {
    const StateVector x = s.state();
    const InputVector u = s.input();
    const NominalParams theta = NominalParams::from_vector(s.theta());
    const StateVector f = derivative(x, u, theta, spec.gravity);
    Eigen::Matrix<double, kStateDim, kParamDim> g = input_matrix(x, u);
    if (corrupt_input_matrix) {
      g(kVel + 2, relaxed_index::kInvMass) = -g(kVel + 2, relaxed_index::kInvMass);
    }
    const StateVector affine = drift(x, spec.gravity) + g * relax(theta).to_vector();
    r.worst = std::max(r.worst, (f - affine).cwiseAbs().maxCoeff());
  }
  return finish(r, t0);
}

CheckResult check_rk4_jacobian(const ModelSpec& spec, int points, std::uint64_t seed) {
  constexpr int kN = kStateDim + kInputDim + kParamDim;
  using Z = Eigen::Matrix<double, kN, 1>;
  const auto t0 = Clock::now();
  Sampler s(spec, seed);
  const double dt = 0.02;
  CheckResult r;
  r.name = "rk4_jacobian/" + spec.name;
  r.threshold = 1e-5;
  r.samples = points;

  Z scale = Z::Ones();
  scale.tail<kParamDim>() = spec.params.to_vector().cwiseAbs();
  const Eigen::Vector3d gravity = spec.gravity;
  const auto step = [&](const auto& z) {
    using T = typename std::decay_t<decltype(z)>::Scalar;
    const Eigen::Matrix<T, kN, 1> full = z.cwiseProduct(scale.template cast<T>());
    const StateVec<T> x = full.template head<kStateDim>();
    const InputVec<T> u = full.template segment<kInputDim>(kStateDim);
    const ParamVec<T> theta = full.template tail<kParamDim>();
    return rk4_kernel<T>(x, u, theta, gravity, dt);
  };

  for (int k = 0; k < points; ++k) {
    Z z;
    z << s.state(), s.input(), s.theta();
    z = z.cwiseQuotient(scale);
    const Eigen::MatrixXd ad = nlp::jacobian_ad<kN>(step, z);
    const Eigen::MatrixXd fd = nlp::jacobian_fd<kN>(step, z, nlp::default_fd_steps<kN>(z, 1e-6));
    for (int j = 0; j < kN; ++j) {
      const double denom = std::max(ad.col(j).cwiseAbs().maxCoeff(), 1.0);
      r.worst = std::max(r.worst, (ad.col(j) - fd.col(j)).cwiseAbs().maxCoeff() / denom);
    }
  }
  return finish(r, t0);
}

CheckResult check_qp_oracle(int problems, std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> dim(2, 6);
  std::uniform_int_distribution<int> rows(1, 12);
  CheckResult r;
  r.name = "qp_oracle";
  r.threshold = 1e-6;
  r.samples = problems;
  int unmatched = 0;
  for (int k = 0; k < problems; ++k) {
    const int n = dim(rng);
    const int m = rows(rng);
    Eigen::MatrixXd L(n, n), C(m, n);
    Eigen::VectorXd q(n), x0(n), d(m);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) L(i, j) = unit(rng);
      q[i] = 5.0 * unit(rng);
      x0[i] = unit(rng);
    }
    const Eigen::MatrixXd P = L * L.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) C(i, j) = unit(rng);
      d[i] = C.row(i).dot(x0) + 0.5 * (unit(rng) + 1.0);  // x0 strictly feasible
    }
    const Eigen::VectorXd oracle = enumerate_active_sets(P, q, C, d);

    // Half of the rows are written as l <= -c'x to exercise lower bounds.
    qp::QpProblem prob;
    prob.P = P.sparseView();
    prob.q = q;
    Eigen::MatrixXd a = C;
    prob.l = Eigen::VectorXd::Constant(m, -qp::kInfinity);
    prob.u = d;
    for (int i = 0; i < m; i += 2) {
      a.row(i) = -C.row(i);
      prob.l[i] = -d[i];
      prob.u[i] = qp::kInfinity;
    }
    prob.A = a.sparseView();
    const qp::QpSolution sol = qp::solve(prob, qp::settings_with_tolerance(1e-10, 50000));
    if (oracle.size() == 0 || sol.status != qp::QpStatus::kSolved) {
      ++unmatched;
      r.worst = std::numeric_limits<double>::infinity();
      continue;
    }
    r.worst = std::max(r.worst, (sol.x - oracle).cwiseAbs().maxCoeff());
  }
  if (unmatched > 0) {
    r.detail = std::to_string(unmatched) + " problems unsolved";
  }
  return finish(r, t0);
}

CheckResult check_bound_soundness(const ModelSpec& spec, int samples, std::uint64_t seed) {
  const auto t0 = Clock::now();
  Sampler s(spec, seed);
  const ParamBox relaxed_box = transform_bounds(s.box());
  CheckResult r;
  r.name = "bound_soundness/" + spec.name;
  r.threshold = 0.0;
  r.samples = samples;
  for (int k = 0; k < samples; ++k) {
    const ParamVector theta = (k % 2 == 0) ? s.theta() : s.corner();
    const ParamVector vt = relax(NominalParams::from_vector(theta)).to_vector();
    if (!relaxed_box.contains(vt)) r.worst += 1.0;
  }
  r.detail = std::to_string(static_cast<long long>(r.worst)) + " violations";
  return finish(r, t0);
}

CheckResult check_estimator_fixed_point(const ModelSpec& spec, EstimatorKind kind, int cases,
                                        std::uint64_t seed) {
  const auto t0 = Clock::now();
  Sampler s(spec, seed);
  const TrialConfig defaults = TrialConfig::for_model(spec.name);
  EstimatorSettings settings = defaults.estimator_settings(spec);
  CheckResult r;
  r.name = std::string(kind == EstimatorKind::kLq ? "lq_fixed_point/" : "nmhpe_fixed_point/") +
           spec.name;
  r.threshold = 1e-6;
  r.samples = cases;
  int failures = 0;
  ParamVector width;
  for (int k = 0; k < cases; ++k) {
    const NominalParams truth = NominalParams::from_vector(s.theta());
    EstimatorState state = kind == EstimatorKind::kLq
                               ? lq_estimator_state(spec.params, defaults.param_lower_factor,
                                                    defaults.param_upper_factor)
                               : nonlinear_estimator_state(spec.params, defaults.param_lower_factor,
                                                           defaults.param_upper_factor);
    const ParamVector target =
        kind == EstimatorKind::kLq ? relax(truth).to_vector() : truth.to_vector();
    state.prior = target;
    width = state.box.upper - state.box.lower;
    const HorizonWindow window =
        self_generated_window(s, target, kind, defaults.horizon_m, defaults.dt);
    const Estimate est = kind == EstimatorKind::kLq ? estimate_lq(window, state, settings)
                                                    : estimate_nonlinear(window, state, settings);
    if (est.status != EstimateStatus::kSolved) ++failures;
    const ParamVector rel =
        (est.params - target).cwiseAbs().cwiseQuotient(target.cwiseAbs().cwiseMax(width));
    r.worst = std::max(r.worst, rel.maxCoeff());
  }
  if (failures > 0) {
    r.detail = std::to_string(failures) + " solves failed";
    r.worst = std::numeric_limits<double>::infinity();
  }
  return finish(r, t0);
}

std::vector<CheckResult> run_validation(const ValidationOptions& options) {
  const int div = options.quick ? 10 : 1;
  std::vector<CheckResult> out;
  std::uint64_t seed = options.seed;
  for (const ModelSpec& spec : {crazyflie(), fusion1()}) {
    out.push_back(check_affine_equivalence(spec, 10000 / div, seed++, options.corrupt_input_matrix));
    out.push_back(check_rk4_jacobian(spec, 100 / div, seed++));
    out.push_back(check_bound_soundness(spec, 100000 / div, seed++));
    out.push_back(check_estimator_fixed_point(spec, EstimatorKind::kLq, 50 / div, seed++));
    out.push_back(check_estimator_fixed_point(spec, EstimatorKind::kNonlinear, 50 / div, seed++));
  }
  out.push_back(check_qp_oracle(200 / div, seed++));
  return out;
}

}  // namespace lqmhpe
