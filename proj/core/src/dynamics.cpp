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
#include <stdexcept>

namespace lqmhpe {

StateVector State::flatten() const {
  StateVector x;
  x.segment<3>(kPos) = position;
  x.segment<4>(kQuat) = attitude.to_vector();
  x.segment<3>(kVel) = velocity;
  x.segment<3>(kOmega) = angular_velocity;
  return x;
}

State State::unflatten(const StateVector& x) {
  State s;
  s.position = x.segment<3>(kPos);
  s.attitude = Quaterniond::from_vector(x.segment<4>(kQuat));
  s.velocity = x.segment<3>(kVel);
  s.angular_velocity = x.segment<3>(kOmega);
  return s;
}

StateVector hover_state() { return State{}.flatten(); }

ParamVector NominalParams::to_vector() const {
  namespace ti = theta_index;
  ParamVector theta;
  theta[ti::kMass] = mass;
  theta.segment<3>(ti::kInertia) = inertia;
  theta.segment<3>(ti::kDrag) = drag;
  theta.segment<kRotors>(ti::kTorqueRatio) = torque_ratio;
  theta.segment<kRotors>(ti::kArmX) = arm_x;
  theta.segment<kRotors>(ti::kArmY) = arm_y;
  return theta;
}

NominalParams NominalParams::from_vector(const ParamVector& theta) {
  namespace ti = theta_index;
  NominalParams p;
  p.mass = theta[ti::kMass];
  p.inertia = theta.segment<3>(ti::kInertia);
  p.drag = theta.segment<3>(ti::kDrag);
  p.torque_ratio = theta.segment<kRotors>(ti::kTorqueRatio);
  p.arm_x = theta.segment<kRotors>(ti::kArmX);
  p.arm_y = theta.segment<kRotors>(ti::kArmY);
  return p;
}

void NominalParams::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw InvalidParameterError("mass must be positive");
  }
  for (int i = 0; i < 3; ++i) {
    if (!(inertia[i] > 0.0) || !std::isfinite(inertia[i])) {
      throw InvalidParameterError("inertia entries must be positive");
    }
    if (!(drag[i] >= 0.0)) {
      throw InvalidParameterError("drag coefficients must be non-negative");
    }
  }
}

double hover_thrust(double mass, const Eigen::Vector3d& gravity) {
  return mass * gravity.norm() / kRotors;
}

double ModelSpec::hover_thrust() const { return lqmhpe::hover_thrust(params.mass, gravity); }

namespace {

ModelSpec make_model(std::string name, double mass, const Eigen::Vector3d& inertia,
                     const Eigen::Vector3d& drag, double b, double arm) {
  ModelSpec spec;
  spec.name = std::move(name);
  spec.params.mass = mass;
  spec.params.inertia = inertia;
  spec.params.drag = drag;
  spec.params.torque_ratio = InputVector::Constant(b);
  spec.params.arm_x << arm, arm, -arm, -arm;
  spec.params.arm_y << arm, -arm, -arm, arm;
  spec.max_thrust = kDefaultThrustMargin * spec.hover_thrust();
  return spec;
}

}  // namespace

ModelSpec crazyflie() {
  return make_model("crazyflie", 2.70e-2, Eigen::Vector3d(1.44e-5, 1.40e-5, 2.17e-5),
                    Eigen::Vector3d(1.00e-2, 1.00e-2, 5.00e-2), 2.51e-2, 2.83e-2);
}

ModelSpec fusion1() {
  return make_model("fusion1", 2.50e-1, Eigen::Vector3d(4.27e-4, 6.09e-4, 1.50e-3),
                    Eigen::Vector3d(2.00e-2, 2.00e-2, 8.00e-2), 1.11e-2, 6.35e-2);
}

ModelSpec model_by_name(const std::string& name) {
  if (name == "crazyflie") return crazyflie();
  if (name == "fusion1") return fusion1();
  throw std::invalid_argument("unknown model '" + name + "' (expected crazyflie or fusion1)");
}

StateVector derivative(const StateVector& x, const InputVector& u, const NominalParams& theta,
                       const Eigen::Vector3d& gravity) {
  theta.validate();
  return derivative_kernel<double>(x, u, theta.to_vector(), gravity);
}

StateVector rk4_step(const StateVector& x, const InputVector& u, const NominalParams& theta,
                     double dt, const Eigen::Vector3d& gravity) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be positive");
  theta.validate();
  return rk4_kernel<double>(x, u, theta.to_vector(), gravity, dt);
}

StateVector euler_step(const StateVector& x, const InputVector& u, const NominalParams& theta,
                       double dt, const Eigen::Vector3d& gravity) {
  if (!(dt > 0.0)) throw std::invalid_argument("euler_step: dt must be positive");
  theta.validate();
  StateVector next = x + dt * derivative_kernel<double>(x, u, theta.to_vector(), gravity);
  normalize_quaternion_block(next.segment<4>(kQuat));
  return next;
}

Disturbance disturbance_mask(DisturbanceChannels channels) {
  Disturbance mask = Disturbance::Ones();
  if (channels == DisturbanceChannels::kTranslationalAndRates) {
    mask.segment<4>(kQuat).setZero();
  }
  return mask;
}

StateVector add_disturbance(const StateVector& x, const Disturbance& w,
                            DisturbanceChannels channels) {
  StateVector next = x + w.cwiseProduct(disturbance_mask(channels));
  if (channels == DisturbanceChannels::kAll) {
    normalize_quaternion_block(next.segment<4>(kQuat));
  }
  return next;
}

}  // namespace lqmhpe
