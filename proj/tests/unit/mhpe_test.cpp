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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "lqmhpe/dynamics.hpp"
#include "lqmhpe/relaxation.hpp"
#include "test_util.hpp"

namespace lqmhpe {
namespace {

namespace ti = theta_index;
constexpr double kDt = 0.02;

StateVector step_state(std::mt19937_64& rng) {
  // Moderate rates and velocities so the window stays in a physical range.
  return test::random_state(rng, 1.0, 1.0, 2.0);
}

// Window from RK4 with parameters theta and optional measured disturbances.
HorizonWindow rk4_window(std::mt19937_64& rng, const ModelSpec& m, const ParamVector& theta,
                         int horizon, double noise = 0.0) {
  HorizonWindow win(horizon, kDt);
  StateVector x = step_state(rng);
  win.start(x);
  for (int j = 0; j < horizon; ++j) {
    const InputVector u = test::random_input(rng, m.max_thrust);
    Disturbance w = Disturbance::Zero();
    if (noise > 0.0) {
      for (int i = 0; i < kStateDim; ++i) w[i] = test::uniform(rng, -noise, noise);
      w = w.cwiseProduct(disturbance_mask(DisturbanceChannels::kTranslationalAndRates));
    }
    const StateVector next = rk4_kernel<double>(x, u, theta, m.gravity, kDt) + kDt * w;
    win.push_step(u, w, next);
    x = next;
  }
  return win;
}

HorizonWindow euler_window(std::mt19937_64& rng, const ModelSpec& m, const ParamVector& vt,
                           int horizon) {
  HorizonWindow win(horizon, kDt);
  StateVector x = step_state(rng);
  win.start(x);
  for (int j = 0; j < horizon; ++j) {
    const InputVector u = test::random_input(rng, m.max_thrust);
    const StateVector next = affine_euler_update(x, u, vt, Disturbance::Zero(), kDt, m.gravity);
    win.push_step(u, Disturbance::Zero(), next);
    x = next;
  }
  return win;
}

double p_norm(const ParamVector& d, const ParamWeight& P) { return std::sqrt(d.dot(P * d)); }

TEST(HorizonWindow, FifoSemantics) {
  HorizonWindow win(3, kDt);
  EXPECT_FALSE(win.started());
  StateVector x = hover_state();
  win.start(x);
  EXPECT_EQ(win.size(), 0);
  for (int k = 1; k <= 5; ++k) {
    x[kPos] = k;
    win.push_step(InputVector::Constant(k), Disturbance::Constant(k), x);
    EXPECT_EQ(win.size(), std::min(k, 3));
  }
  EXPECT_TRUE(win.full());
  ASSERT_EQ(win.states().size(), 4u);
  // Last three transitions: inputs 3, 4, 5 and states 2..5.
  for (int j = 0; j < 3; ++j) {
    EXPECT_EQ(win.inputs()[j][0], 3 + j);
    EXPECT_EQ(win.disturbances()[j][0], 3 + j);
  }
  for (int j = 0; j < 4; ++j) EXPECT_EQ(win.states()[j][kPos], 2 + j);
}

TEST(HorizonWindow, OneStepIntoEmptyWindow) {
  HorizonWindow win(10, kDt);
  win.start(hover_state());
  win.push_step(InputVector::Zero(), Disturbance::Zero(), hover_state());
  EXPECT_EQ(win.size(), 1);
  EXPECT_FALSE(win.full());
}

TEST(HorizonWindow, RequiresStartAndValidArguments) {
  HorizonWindow win(2, kDt);
  EXPECT_THROW(win.push_step(InputVector::Zero(), Disturbance::Zero(), hover_state()),
               std::logic_error);
  EXPECT_THROW(HorizonWindow(0, kDt), std::invalid_argument);
  EXPECT_THROW(HorizonWindow(3, 0.0), std::invalid_argument);
}

TEST(TuningWeights, PowerOfTenOfMagnitude) {
  ParamVector p = crazyflie().params.to_vector();
  const ParamWeight w = tuning_weights(p);
  EXPECT_DOUBLE_EQ(w(ti::kMass, ti::kMass), 100.0);          // 2.70e-2
  EXPECT_DOUBLE_EQ(w(ti::kInertia, ti::kInertia), 1e5);     // 1.44e-5
  p[0] = 1.0;
  EXPECT_DOUBLE_EQ(tuning_weights(p)(0, 0), 1.0);
  EXPECT_TRUE(w.isDiagonal());
}

TEST(TuningWeights, RejectsZeroEntry) {
  ParamVector p = crazyflie().params.to_vector();
  p[3] = 0.0;
  EXPECT_THROW(tuning_weights(p), std::invalid_argument);
}

TEST(EstimatorState, ValidateRejectsPriorOutsideBox) {
  EstimatorState s = nonlinear_estimator_state(crazyflie().params);
  EXPECT_NO_THROW(s.validate());
  s.prior[ti::kMass] *= 2.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(EstimateNonlinear, FixedPointWithZeroObjective) {
  std::mt19937_64 rng(41);
  for (const ModelSpec& m : {crazyflie(), fusion1()}) {
    const ParamVector truth = test::random_params(rng, m.params).to_vector();
    EstimatorState s = nonlinear_estimator_state(m.params);
    s.prior = truth;
    const Estimate e = estimate_nonlinear(rk4_window(rng, m, truth, 10), s);
    ASSERT_EQ(e.status, EstimateStatus::kSolved);
    EXPECT_LE(((e.params - truth).array() / truth.array()).abs().maxCoeff(), 1e-6);
    EXPECT_LE(e.objective, 1e-8);
  }
}

TEST(EstimateNonlinear, MovesTowardCornerTruth) {
  std::mt19937_64 rng(42);
  const ModelSpec m = crazyflie();
  const EstimatorState s = nonlinear_estimator_state(m.params);
  ParamVector truth = m.params.to_vector();
  truth[ti::kMass] *= 1.5;
  truth.segment<3>(ti::kInertia) *= 0.5;
  const HorizonWindow win = rk4_window(rng, m, truth, 10);
  const Estimate e = estimate_nonlinear(win, s);
  ASSERT_EQ(e.status, EstimateStatus::kSolved);
  EXPECT_LT(p_norm(e.params - truth, s.weight), p_norm(s.prior - truth, s.weight));

  // Grid over (mass, Izz) around the estimate finds no lower objective.
  const double best = nonlinear_objective(win, s, e.params);
  EXPECT_NEAR(best, e.objective, 1e-9 * std::max(1.0, best));
  for (int i = -5; i <= 5; ++i) {
    for (int j = -5; j <= 5; ++j) {
      ParamVector t = e.params;
      t[ti::kMass] *= 1.0 + 0.02 * i;
      t[ti::kInertia + 2] *= 1.0 + 0.02 * j;
      if (!s.box.contains(t)) continue;
      EXPECT_GE(nonlinear_objective(win, s, t), best - 1e-9 * std::max(1.0, best));
    }
  }
}

TEST(EstimateNonlinear, HoverWindowReturnsPrior) {
  const ModelSpec m = fusion1();
  const EstimatorState s = nonlinear_estimator_state(m.params);
  const InputVector u = InputVector::Constant(m.hover_thrust());
  HorizonWindow win(10, kDt);
  win.start(hover_state());
  for (int j = 0; j < 10; ++j) win.push_step(u, Disturbance::Zero(), hover_state());
  // The data cannot tell inertias or drag apart: a different theta fits too.
  ParamVector other = m.params.to_vector();
  other.segment<3>(ti::kInertia) *= 1.3;
  other.segment<3>(ti::kDrag) *= 0.6;
  EXPECT_LE((rk4_kernel<double>(hover_state(), u, other, m.gravity, kDt) - hover_state())
                .cwiseAbs()
                .maxCoeff(),
            1e-14);
  const Estimate e = estimate_nonlinear(win, s);
  ASSERT_EQ(e.status, EstimateStatus::kSolved);
  EXPECT_LE(((e.params - s.prior).array() / s.prior.array()).abs().maxCoeff(), 1e-8);
}

TEST(EstimateLq, FixedPoint) {
  std::mt19937_64 rng(43);
  for (const ModelSpec& m : {crazyflie(), fusion1()}) {
    const ParamVector vt = relax(test::random_params(rng, m.params)).to_vector();
    EstimatorState s = lq_estimator_state(m.params);
    s.prior = vt;
    const Estimate e = estimate_lq(euler_window(rng, m, vt, 10), s);
    ASSERT_EQ(e.status, EstimateStatus::kSolved);
    const ParamVector scale = vt.cwiseAbs().cwiseMax(s.box.upper - s.box.lower);
    EXPECT_LE((e.params - vt).cwiseAbs().cwiseQuotient(scale).maxCoeff(), 1e-6);
  }
}

TEST(EstimateLq, NoRandomFeasiblePointDoesBetter) {
  std::mt19937_64 rng(44);
  const ModelSpec m = crazyflie();
  const EstimatorState s = lq_estimator_state(m.params);
  const ParamVector truth = relax(test::random_params(rng, m.params)).to_vector();
  const HorizonWindow win = euler_window(rng, m, truth, 10);
  const Estimate e = estimate_lq(win, s);
  ASSERT_EQ(e.status, EstimateStatus::kSolved);
  const double best = lq_objective(win, s, e.params);
  for (int k = 0; k < 1000; ++k) {
    ParamVector v;
    for (int i = 0; i < kParamDim; ++i) v[i] = test::uniform(rng, s.box.lower[i], s.box.upper[i]);
    EXPECT_GE(lq_objective(win, s, v), best - 1e-6);
  }
}

TEST(EstimateLq, Rk4DataStaysInBoxAndBeatsTruth) {
  std::mt19937_64 rng(45);
  const ModelSpec m = fusion1();
  const EstimatorState s = lq_estimator_state(m.params);
  const NominalParams truth = test::random_params(rng, m.params);
  const HorizonWindow win = rk4_window(rng, m, truth.to_vector(), 10, 2.5);
  const Estimate e = estimate_lq(win, s);
  ASSERT_EQ(e.status, EstimateStatus::kSolved);
  EXPECT_TRUE(s.box.contains(e.params));
  // The truth only misses the Euler constraints by the integrator defect, so
  // the optimum cannot be worse than it.
  EXPECT_LE(e.objective, lq_objective(win, s, relax(truth).to_vector()) + 1e-9);
}

TEST(Estimators, ResultsStayInBoxForOutOfBoxData) {
  std::mt19937_64 rng(46);
  const ModelSpec m = crazyflie();
  ParamVector far = m.params.to_vector();
  far[ti::kMass] *= 3.0;
  far.segment<3>(ti::kInertia) *= 0.2;
  const HorizonWindow win = rk4_window(rng, m, far, 10);
  const EstimatorState ns = nonlinear_estimator_state(m.params);
  const EstimatorState ls = lq_estimator_state(m.params);
  const Estimate en = estimate_nonlinear(win, ns);
  const Estimate el = estimate_lq(win, ls);
  EXPECT_TRUE(ns.box.contains(en.params));
  EXPECT_TRUE(ls.box.contains(el.params));
}

TEST(Estimators, NotReadyOnPartialWindow) {
  std::mt19937_64 rng(47);
  const ModelSpec m = fusion1();
  HorizonWindow win(10, kDt);
  win.start(hover_state());
  win.push_step(InputVector::Zero(), Disturbance::Zero(), hover_state());
  const Estimate el = estimate_lq(win, lq_estimator_state(m.params));
  const Estimate en = estimate_nonlinear(win, nonlinear_estimator_state(m.params));
  EXPECT_EQ(el.status, EstimateStatus::kNotReady);
  EXPECT_EQ(en.status, EstimateStatus::kNotReady);
  EXPECT_EQ(el.params, lq_estimator_state(m.params).prior);
}

TEST(BuildLqProblem, Dimensions) {
  std::mt19937_64 rng(48);
  const ModelSpec m = crazyflie();
  const HorizonWindow win = euler_window(rng, m, relax(m.params).to_vector(), 4);
  const EstimatorState s = lq_estimator_state(m.params);
  const qp::QpProblem p = build_lq_problem(win, s);
  EXPECT_EQ(p.num_variables(), kParamDim + 4 * kStateDim);
  EXPECT_EQ(p.num_constraints(), 4 * kStateDim + kParamDim);
  EstimatorSettings no_quat;
  no_quat.include_quaternion_rows = false;
  EXPECT_EQ(build_lq_problem(win, s, no_quat).num_constraints(), 4 * (kStateDim - 4) + kParamDim);
}

}  // namespace
}  // namespace lqmhpe
