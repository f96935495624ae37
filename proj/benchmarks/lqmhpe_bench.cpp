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

// Micro-benchmarks for the per-step work of the control loop.

#include <optional>
#include <random>

#include <benchmark/benchmark.h>

#include "lqmhpe/dynamics.hpp"
#include "lqmhpe/mhpe.hpp"
#include "lqmhpe/monte_carlo.hpp"
#include "lqmhpe/nmpc.hpp"
#include "lqmhpe/qp_solver.hpp"
#include "lqmhpe/relaxation.hpp"

namespace {

using namespace lqmhpe;

// A full estimator window recorded from the nominal planner on the true plant.
struct WindowFixture {
  ModelSpec spec = crazyflie();
  TrialConfig cfg = TrialConfig::for_model("crazyflie");
  EstimatorSettings settings;
  EstimatorState lq;
  EstimatorState nl;
  HorizonWindow window{10, 0.02};

  explicit WindowFixture(std::uint64_t seed) {
    cfg.seed = seed;
    settings = cfg.estimator_settings(spec);
    lq = lq_estimator_state(spec.params);
    nl = nonlinear_estimator_state(spec.params);
    const TrialScenario sc = draw_scenario(cfg, spec);
    const ParamVector vt = lq.prior;
    NmpcConfig nmpc = cfg.nmpc_config(spec);
    nmpc.u_ref = hover_input(vt, spec.gravity);
    window = HorizonWindow(cfg.horizon_m, cfg.dt);
    StateVector x = sc.initial_state;
    window.start(x);
    std::optional<PlannedTrajectory> warm;
    for (int j = 0; j < cfg.horizon_m; ++j) {
      const PlannedTrajectory p = plan(x, vt, nmpc, warm);
      const InputVector u = apply_first(p, nmpc);
      x = rk4_kernel<double>(x, u, sc.true_params.to_vector(), spec.gravity, cfg.dt) +
          cfg.dt * sc.disturbances[j];
      window.push_step(u, sc.disturbances[j], x);
      warm = p;
    }
  }
};

void BM_Rk4Step(benchmark::State& state) {
  const ModelSpec m = crazyflie();
  StateVector x = hover_state();
  x[kVel] = 0.3;
  x[kOmega + 2] = 1.0;
  const InputVector u = InputVector::Constant(m.hover_thrust());
  for (auto _ : state) {
    benchmark::DoNotOptimize(rk4_step(x, u, m.params, 0.02));
  }
}
BENCHMARK(BM_Rk4Step);

void BM_EstimateLq(benchmark::State& state) {
  const WindowFixture f(static_cast<std::uint64_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_lq(f.window, f.lq, f.settings));
  }
}
BENCHMARK(BM_EstimateLq)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_EstimateNonlinear(benchmark::State& state) {
  const WindowFixture f(static_cast<std::uint64_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_nonlinear(f.window, f.nl, f.settings));
  }
}
BENCHMARK(BM_EstimateNonlinear)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_PlanCold(benchmark::State& state) {
  const ModelSpec m = crazyflie();
  TrialConfig cfg = TrialConfig::for_model("crazyflie");
  cfg.horizon_n = static_cast<int>(state.range(0));
  NmpcConfig nmpc = cfg.nmpc_config(m);
  const ParamVector vt = relax(m.params).to_vector();
  nmpc.u_ref = hover_input(vt, m.gravity);
  StateVector x = hover_state();
  x.segment<3>(kPos) << 1.0, -0.5, 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(plan(x, vt, nmpc, std::nullopt));
  }
}
BENCHMARK(BM_PlanCold)->Arg(10)->Arg(25)->Unit(benchmark::kMillisecond);

void BM_QpDense(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = g(rng);
  }
  qp::QpProblem p;
  p.P = (m * m.transpose() + Eigen::MatrixXd::Identity(n, n)).sparseView();
  p.q = Eigen::VectorXd::NullaryExpr(n, [&] { return g(rng); });
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  p.A = a.sparseView();
  p.l = Eigen::VectorXd::Constant(n, -0.5);
  p.u = Eigen::VectorXd::Constant(n, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(qp::solve(p));
  }
}
BENCHMARK(BM_QpDense)->Arg(19)->Arg(60)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
