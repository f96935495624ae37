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

#include "lqmhpe/dynamics.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace lqmhpe {
namespace {

StateVector hover_at(const Eigen::Vector3d& p) {
  StateVector x = hover_state();
  x.segment<3>(kPos) = p;
  return x;
}

InputVector hover_u(const ModelSpec& m) { return InputVector::Constant(m.hover_thrust()); }

TEST(Derivative, HoverIsEquilibriumForBothModels) {
  for (const ModelSpec& m : {crazyflie(), fusion1()}) {
    const StateVector dx = derivative(hover_state(), hover_u(m), m.params);
    EXPECT_LE(dx.cwiseAbs().maxCoeff(), 1e-12) << m.name;
  }
}

TEST(Derivative, CrazyflieHoverThrust) {
  // mu g / 4 with mu = 2.70e-2 kg.
  EXPECT_NEAR(crazyflie().hover_thrust(), 2.70e-2 * 9.81 / 4.0, 1e-15);
  EXPECT_NEAR(crazyflie().hover_thrust(), 0.06622, 1e-5);
}

TEST(Derivative, FreeFallWithZeroInput) {
  const StateVector dx = derivative(hover_state(), InputVector::Zero(), crazyflie().params);
  StateVector expected = StateVector::Zero();
  expected[kVel + 2] = -9.81;
  EXPECT_LE((dx - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Derivative, RollTorqueBalance) {
  const ModelSpec m = crazyflie();
  const double eps = 1e-3, uh = m.hover_thrust();
  const InputVector u(uh + eps, uh - eps, uh - eps, uh + eps);
  const StateVector dx = derivative(hover_state(), u, m.params);
  const double expected = 4.0 * eps * 2.83e-2 / 1.44e-5;
  EXPECT_NEAR(dx[kOmega], expected, 1e-12 * expected);
  EXPECT_NEAR(dx[kOmega + 1], 0.0, 1e-9);
  EXPECT_NEAR(dx[kOmega + 2], 0.0, 1e-9);
}

TEST(Derivative, GravityMagnitudeAtRandomAttitude) {
  std::mt19937_64 rng(5);
  NominalParams p = crazyflie().params;
  p.drag.setZero();
  for (int k = 0; k < 100; ++k) {
    StateVector x = hover_state();
    x.segment<4>(kQuat) = test::random_unit_quaternion(rng);
    const StateVector dx = derivative(x, InputVector::Zero(), p);
    EXPECT_NEAR(dx.segment<3>(kVel).norm(), 9.81, 1e-12);
  }
}

TEST(Derivative, RejectsNonPhysicalParameters) {
  NominalParams p = crazyflie().params;
  p.mass = 0.0;
  EXPECT_THROW(derivative(hover_state(), InputVector::Zero(), p), InvalidParameterError);
  p = crazyflie().params;
  p.inertia[1] = -1.0;
  EXPECT_THROW(derivative(hover_state(), InputVector::Zero(), p), InvalidParameterError);
}

TEST(Rk4Step, HoverIsFixedPoint) {
  const ModelSpec m = fusion1();
  const StateVector x = hover_at({1.0, -2.0, 0.5});
  EXPECT_LE((rk4_step(x, hover_u(m), m.params, 0.02) - x).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Rk4Step, KeepsUnitQuaternion) {
  std::mt19937_64 rng(6);
  const ModelSpec m = crazyflie();
  for (int k = 0; k < 1000; ++k) {
    const StateVector x = test::random_state(rng);
    const StateVector next = rk4_step(x, test::random_input(rng, m.max_thrust), m.params, 0.02);
    EXPECT_NEAR(next.segment<4>(kQuat).norm(), 1.0, 1e-12);
  }
}

TEST(Rk4Step, BallisticFreeFall) {
  // Drag-free, so the closed form -g t^2 / 2 applies.
  NominalParams p = crazyflie().params;
  p.drag.setZero();
  StateVector x = hover_state();
  for (int k = 0; k < 25; ++k) x = rk4_step(x, InputVector::Zero(), p, 0.02);
  EXPECT_NEAR(x[kPos + 2], -1.22625, 1e-4);
}

TEST(Rk4Step, RejectsNonPositiveStep) {
  EXPECT_THROW(rk4_step(hover_state(), InputVector::Zero(), crazyflie().params, 0.0),
               std::invalid_argument);
}

TEST(EulerStep, HoverUnchanged) {
  const ModelSpec m = crazyflie();
  const StateVector x = hover_at({0.3, 0.2, 0.1});
  EXPECT_LE((euler_step(x, hover_u(m), m.params, 0.02) - x).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(EulerStep, OneFreeFallStep) {
  const StateVector x = euler_step(hover_state(), InputVector::Zero(), crazyflie().params, 0.02);
  EXPECT_NEAR(x[kVel + 2], -0.1962, 1e-15);
}

TEST(EulerStep, AgreesWithRk4AtSmallStep) {
  std::mt19937_64 rng(7);
  const ModelSpec m = fusion1();
  for (int k = 0; k < 100; ++k) {
    const StateVector x = test::random_state(rng);
    const InputVector u = test::random_input(rng, m.max_thrust);
    EXPECT_LE((euler_step(x, u, m.params, 1e-5) - rk4_step(x, u, m.params, 1e-5)).norm(), 1e-7);
  }
}

TEST(EulerStep, DifferenceToRk4IsSecondOrder) {
  std::mt19937_64 rng(8);
  const ModelSpec m = crazyflie();
  for (int k = 0; k < 20; ++k) {
    const StateVector x = test::random_state(rng);
    const InputVector u = test::random_input(rng, m.max_thrust);
    const double h = 1e-3;
    const double e1 = (euler_step(x, u, m.params, h) - rk4_step(x, u, m.params, h)).norm();
    const double e2 =
        (euler_step(x, u, m.params, h / 2) - rk4_step(x, u, m.params, h / 2)).norm();
    EXPECT_GE(std::log2(e1 / e2), 1.9);
  }
}

TEST(AddDisturbance, ZeroLeavesStateUnchanged) {
  std::mt19937_64 rng(9);
  const StateVector x = test::random_state(rng);
  EXPECT_EQ(add_disturbance(x, Disturbance::Zero()), x);
}

TEST(AddDisturbance, VelocityChannel) {
  Disturbance w = Disturbance::Zero();
  w[kVel] = 0.1;
  EXPECT_DOUBLE_EQ(add_disturbance(hover_state(), w)[kVel], 0.1);
}

TEST(AddDisturbance, QuaternionChannelRenormalizes) {
  Disturbance w = Disturbance::Zero();
  w.segment<4>(kQuat) << 0.1, 0.2, -0.3, 0.05;
  const StateVector all = add_disturbance(hover_state(), w, DisturbanceChannels::kAll);
  EXPECT_NEAR(all.segment<4>(kQuat).norm(), 1.0, 1e-15);
  const StateVector skip = add_disturbance(hover_state(), w);
  EXPECT_EQ(skip.segment<4>(kQuat), hover_state().segment<4>(kQuat));
}

TEST(DisturbanceMask, ChannelCounts) {
  EXPECT_EQ(disturbance_mask(DisturbanceChannels::kTranslationalAndRates).sum(), 9.0);
  EXPECT_EQ(disturbance_mask(DisturbanceChannels::kAll).sum(), 13.0);
}

TEST(ModelSpec, LookupByName) {
  EXPECT_EQ(model_by_name("crazyflie").params.mass, 2.70e-2);
  EXPECT_EQ(model_by_name("fusion1").params.mass, 2.50e-1);
  EXPECT_THROW(model_by_name("hexacopter"), std::invalid_argument);
}

TEST(State, FlattenRoundTrip) {
  std::mt19937_64 rng(10);
  const StateVector x = test::random_state(rng);
  EXPECT_EQ(State::unflatten(x).flatten(), x);
}

}  // namespace
}  // namespace lqmhpe
