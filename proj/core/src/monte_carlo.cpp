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

#include "lqmhpe/monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

#include "lqmhpe/relaxation.hpp"

namespace lqmhpe {

namespace {

// Independent random streams of one trial.
enum Stream : std::uint64_t { kParamStream = 1, kInitialStream = 2, kNoiseStream = 3 };

std::mt19937_64 make_engine(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool state_ok(const StateVector& x, double bound) {
  return x.allFinite() && x.cwiseAbs().maxCoeff() <= bound;
}

}  // namespace

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::kNone:
      return "none";
    case Scheme::kLqMhpe:
      return "lq_mhpe";
    case Scheme::kNmhpe:
      return "nmhpe";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "none") return Scheme::kNone;
  if (name == "lq_mhpe") return Scheme::kLqMhpe;
  if (name == "nmhpe") return Scheme::kNmhpe;
  throw std::invalid_argument("unknown scheme '" + name + "' (expected none, lq_mhpe or nmhpe)");
}

// ---------------------------------------------------------------- config

TrialConfig TrialConfig::for_model(const std::string& model) {
  TrialConfig cfg;
  cfg.model = model;
  if (model == "crazyflie") {
    cfg.position_bound = 5.0;
    cfg.velocity_bound = 2.5;
    cfg.rate_bound = 2.5;
  } else if (model == "fusion1") {
    cfg.position_bound = 10.0;
    cfg.velocity_bound = 5.0;
    cfg.rate_bound = 5.0;
  } else {
    throw std::invalid_argument("unknown model '" + model + "' (expected crazyflie or fusion1)");
  }
  return cfg;
}

int TrialConfig::num_steps() const { return static_cast<int>(std::lround(duration / dt)); }

void TrialConfig::validate() const {
  auto require = [](bool ok, const char* field, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("trial config: ") + field + " " + what);
  };
  model_by_name(model);
  require(dt > 0.0 && std::isfinite(dt), "dt", "must be positive and finite");
  require(duration > 0.0 && std::isfinite(duration), "duration", "must be positive and finite");
  require(std::abs(num_steps() * dt - duration) <= 1e-9 * duration, "dt",
          "must divide duration");
  require(param_lower_factor > 0.0 && param_lower_factor <= param_upper_factor &&
              std::isfinite(param_upper_factor),
          "param_lower_factor", "must satisfy 0 < lower <= upper < inf");
  require(noise_bound >= 0.0 && std::isfinite(noise_bound), "noise_bound",
          "must be finite and non-negative");
  require(position_bound >= 0.0 && std::isfinite(position_bound), "position_bound",
          "must be finite and non-negative");
  require(velocity_bound >= 0.0 && std::isfinite(velocity_bound), "velocity_bound",
          "must be finite and non-negative");
  require(rate_bound >= 0.0 && std::isfinite(rate_bound), "rate_bound",
          "must be finite and non-negative");
  require(horizon_n >= 1, "horizon_n", "must be >= 1");
  require(horizon_m >= 1, "horizon_m", "must be >= 1");
  require(position_weight >= 0.0 && attitude_weight >= 0.0 && velocity_weight >= 0.0 &&
              rate_weight >= 0.0 && terminal_factor >= 0.0 && input_weight >= 0.0,
          "weights", "must be non-negative");
  require(nmpc_max_iter >= 1, "nmpc_max_iter", "must be >= 1");
  require(nmpc_tolerance > 0.0, "nmpc_tolerance", "must be positive");
  require(disturbance_weight > 0.0, "disturbance_weight", "must be positive");
  require(divergence_cost > 0.0, "divergence_cost", "must be positive");
  require(divergence_state_bound > 0.0, "divergence_state_bound", "must be positive");
}

NmpcConfig TrialConfig::nmpc_config(const ModelSpec& spec) const {
  NmpcConfig cfg = NmpcConfig::defaults(spec);
  cfg.horizon = horizon_n;
  cfg.dt = dt;
  Eigen::Matrix<double, kStateDim, 1> q;
  q.segment<3>(kPos).setConstant(position_weight);
  q.segment<4>(kQuat).setConstant(attitude_weight);
  q.segment<3>(kVel).setConstant(velocity_weight);
  q.segment<3>(kOmega).setConstant(rate_weight);
  cfg.Q = q.asDiagonal();
  cfg.Qf = terminal_factor * cfg.Q;
  cfg.R = input_weight * InputWeight::Identity();
  cfg.sqp.max_iter = nmpc_max_iter;
  cfg.sqp.tol = nmpc_tolerance;
  cfg.sqp.qp = qp::settings_with_tolerance(nmpc_tolerance, cfg.sqp.qp.max_iter);
  return cfg;
}

EstimatorSettings TrialConfig::estimator_settings(const ModelSpec& spec) const {
  EstimatorSettings s;
  s.disturbance_weight = disturbance_weight;
  s.gravity = spec.gravity;
  s.include_quaternion_rows = include_quaternion_rows;
  return s;
}

// ---------------------------------------------------------------- scenario

Eigen::Vector4d uniform_quaternion(double u1, double u2, double u3) {
  // Shoemake's subgroup algorithm.
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const double t1 = 2.0 * std::numbers::pi * u2, t2 = 2.0 * std::numbers::pi * u3;
  Eigen::Vector4d q(b * std::cos(t2), a * std::sin(t1), a * std::cos(t1), b * std::sin(t2));
  return q / q.norm();
}

TrialScenario draw_scenario(const TrialConfig& cfg, const ModelSpec& spec) {
  TrialScenario sc;

  auto prng = make_engine(cfg.seed, kParamStream);
  const ParamBox box = scaled_box(spec.params, cfg.param_lower_factor, cfg.param_upper_factor);
  ParamVector theta;
  for (int i = 0; i < kParamDim; ++i) theta[i] = uniform(prng, box.lower[i], box.upper[i]);
  sc.true_params = NominalParams::from_vector(theta);

  auto xrng = make_engine(cfg.seed, kInitialStream);
  StateVector x = hover_state();
  for (int i = 0; i < 3; ++i) x[kPos + i] = uniform(xrng, -cfg.position_bound, cfg.position_bound);
  for (int i = 0; i < 3; ++i) x[kVel + i] = uniform(xrng, -cfg.velocity_bound, cfg.velocity_bound);
  for (int i = 0; i < 3; ++i) x[kOmega + i] = uniform(xrng, -cfg.rate_bound, cfg.rate_bound);
  const double u1 = uniform(xrng, 0.0, 1.0), u2 = uniform(xrng, 0.0, 1.0), u3 = uniform(xrng, 0.0, 1.0);
  if (cfg.random_attitude) x.segment<4>(kQuat) = uniform_quaternion(u1, u2, u3);
  sc.initial_state = x;

  auto nrng = make_engine(cfg.seed, kNoiseStream);
  const Disturbance mask = disturbance_mask(cfg.disturbance_channels);
  const int steps = cfg.num_steps();
  sc.disturbances.resize(steps);
  for (int k = 0; k < steps; ++k) {
    Disturbance w;
    for (int i = 0; i < kStateDim; ++i) w[i] = uniform(nrng, -cfg.noise_bound, cfg.noise_bound);
    sc.disturbances[k] = w.cwiseProduct(mask);
  }
  return sc;
}

double stage_cost(const StateVector& x, const InputVector& u, const NmpcConfig& nmpc,
                  const InputVector& u_ref) {
  StateVector ref = nmpc.x_ref;
  if (x.segment<4>(kQuat).dot(ref.segment<4>(kQuat)) < 0.0) ref.segment<4>(kQuat) *= -1.0;
  const StateVector dx = x - ref;
  const InputVector du = u - u_ref;
  return dx.dot(nmpc.Q * dx) + du.dot(nmpc.R * du);
}

// ---------------------------------------------------------------- trial

TrialRecord run_trial(const TrialConfig& cfg) {
  cfg.validate();
  const ModelSpec spec = model_by_name(cfg.model);
  return run_trial(cfg, draw_scenario(cfg, spec));
}

TrialRecord run_trial(const TrialConfig& cfg, const TrialScenario& scenario) {
  cfg.validate();
  const ModelSpec spec = model_by_name(cfg.model);
  const NmpcConfig nmpc_base = cfg.nmpc_config(spec);
  const EstimatorSettings est_settings = cfg.estimator_settings(spec);
  const int steps = cfg.num_steps();
  if (static_cast<int>(scenario.disturbances.size()) < steps) {
    throw std::invalid_argument("run_trial: scenario has fewer disturbances than steps");
  }

  TrialRecord rec;
  rec.seed = cfg.seed;
  rec.model = cfg.model;
  rec.scheme = cfg.scheme;

  // The controller's initial belief is the nominal model.
  EstimatorState lq_state = lq_estimator_state(spec.params, cfg.param_lower_factor,
                                               cfg.param_upper_factor);
  EstimatorState nl_state = nonlinear_estimator_state(spec.params, cfg.param_lower_factor,
                                                      cfg.param_upper_factor);
  const ParamVector nominal_relaxed = lq_state.prior;
  HorizonWindow window(cfg.horizon_m, cfg.dt);

  // Realized cost is measured against the true hover thrust so schemes are
  // compared on the same yardstick.
  const InputVector true_hover =
      InputVector::Constant(hover_thrust(scenario.true_params.mass, spec.gravity));

  StateVector x = scenario.initial_state;
  window.start(x);
  std::optional<PlannedTrajectory> warm;
  ParamVector vartheta = nominal_relaxed;
  double cost = 0.0;

  for (int k = 0; k < steps; ++k) {
    double est_time = 0.0;
    if (cfg.scheme != Scheme::kNone && window.full()) {
      Estimate est;
      if (cfg.scheme == Scheme::kLqMhpe) {
        est = estimate_lq(window, lq_state, est_settings);
        if (est.status == EstimateStatus::kSolved) lq_state.prior = est.params;
        vartheta = lq_state.prior;
      } else {
        est = estimate_nonlinear(window, nl_state, est_settings);
        if (est.status == EstimateStatus::kSolved) nl_state.prior = est.params;
        vartheta = relax(NominalParams::from_vector(nl_state.prior)).to_vector();
      }
      if (est.status == EstimateStatus::kFailed) ++rec.estimator_failures;
      est_time = cfg.record_timing ? est.solve_time : 0.0;
      rec.estimator_times.push_back(est_time);
    }

    NmpcConfig nmpc = nmpc_base;
    nmpc.u_ref = hover_input(vartheta, spec.gravity);
    const PlannedTrajectory plan_k = plan(x, vartheta, nmpc, warm);
    if (plan_k.fallback) ++rec.planner_fallbacks;
    const double plan_time = cfg.record_timing ? plan_k.solve_time : 0.0;
    rec.planner_times.push_back(plan_time);
    const InputVector u = apply_first(plan_k, nmpc);
    warm = plan_k;

    const double stage = stage_cost(x, u, nmpc, true_hover);
    cost += stage;
    if (cfg.record_trace) {
      rec.trace.push_back({k * cfg.dt, x, u, vartheta, stage, est_time, plan_time});
    }

    const Disturbance& w = scenario.disturbances[k];
    StateVector next = rk4_kernel<double>(x, u, scenario.true_params.to_vector(), spec.gravity, cfg.dt);
    next += cfg.dt * w;
    if (cfg.disturbance_channels == DisturbanceChannels::kAll) {
      normalize_quaternion_block(next.segment<4>(kQuat));
    }
    rec.steps = k + 1;
    if (!state_ok(next, cfg.divergence_state_bound) || !std::isfinite(cost)) {
      rec.diverged = true;
      x = next;
      break;
    }
    window.push_step(u, w, next);
    x = next;
  }

  if (rec.diverged) {
    rec.cost = cfg.divergence_cost;
    rec.final_position_error = std::numeric_limits<double>::infinity();
  } else {
    rec.cost = std::min(cost, cfg.divergence_cost);
    rec.final_position_error = x.segment<3>(kPos).norm();
    if (cfg.record_trace) {
      TraceRow last;
      last.time = steps * cfg.dt;
      last.state = x;
      last.estimate = vartheta;
      rec.trace.push_back(last);
    }
  }
  rec.estimator = TimingStats::of(rec.estimator_times);
  rec.planner = TimingStats::of(rec.planner_times);
  return rec;
}

// ---------------------------------------------------------------- battery

TimingStats TimingStats::of(const std::vector<double>& samples) {
  TimingStats s;
  s.count = static_cast<int>(samples.size());
  if (samples.empty()) return s;
  double sum = 0.0;
  s.min = samples.front();
  s.max = samples.front();
  for (double v : samples) {
    sum += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean = sum / static_cast<double>(samples.size());
  return s;
}

SchemeSummary summarize(Scheme scheme, const std::vector<TrialRecord>& records) {
  SchemeSummary s;
  s.scheme = scheme;
  double cost_sum = 0.0, est_sum = 0.0, plan_sum = 0.0;
  int est_trials = 0;
  bool first = true, first_est = true;
  for (const TrialRecord& r : records) {
    if (r.scheme != scheme) continue;
    ++s.trials;
    if (r.diverged) ++s.diverged;
    if (!r.diverged && r.final_position_error < 1.0) ++s.converged;
    cost_sum += r.cost;
    plan_sum += r.planner.mean;
    if (first) {
      s.cost_best = s.cost_worst = r.cost;
      s.planner_best = r.planner.min;
      s.planner_worst = r.planner.max;
      first = false;
    } else {
      s.cost_best = std::min(s.cost_best, r.cost);
      s.cost_worst = std::max(s.cost_worst, r.cost);
      s.planner_best = std::min(s.planner_best, r.planner.min);
      s.planner_worst = std::max(s.planner_worst, r.planner.max);
    }
    if (r.estimator.count > 0) {
      ++est_trials;
      est_sum += r.estimator.mean;
      if (first_est) {
        s.estimator_best = r.estimator.min;
        s.estimator_worst = r.estimator.max;
        first_est = false;
      } else {
        s.estimator_best = std::min(s.estimator_best, r.estimator.min);
        s.estimator_worst = std::max(s.estimator_worst, r.estimator.max);
      }
    }
  }
  if (s.trials > 0) {
    s.cost_mean = cost_sum / s.trials;
    s.planner_mean = plan_sum / s.trials;
  }
  if (est_trials > 0) s.estimator_mean = est_sum / est_trials;
  return s;
}

BatteryResult run_battery(const BatteryConfig& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("run_battery: trials must be >= 1");
  if (cfg.schemes.empty()) throw std::invalid_argument("run_battery: no schemes given");
  cfg.base.validate();

  const int per_scheme = cfg.trials;
  const int total = per_scheme * static_cast<int>(cfg.schemes.size());
  BatteryResult result;
  result.config = cfg;
  result.records.resize(total);

  std::atomic<int> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto worker = [&]() {
    for (int task = next++; task < total && !failed; task = next++) {
      TrialConfig tc = cfg.base;
      tc.scheme = cfg.schemes[task / per_scheme];
      tc.seed = cfg.first_seed + static_cast<std::uint64_t>(task % per_scheme);
      try {
        result.records[task] = run_trial(tc);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  };
  const int jobs = std::clamp(cfg.jobs, 1, total);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  for (Scheme s : cfg.schemes) result.summaries.push_back(summarize(s, result.records));
  return result;
}

}  // namespace lqmhpe
