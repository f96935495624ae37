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

#pragma once

// Nonlinear multirotor dynamics and their discretizations.
//
//   p'     = R(q) v
//   q'     = 1/2 G(q) w
//   v'     = R(q)^T g + (K u - A v) / mu - w x v
//   w'     = J^-1 (B u - w x J w)
//
// The *_kernel templates are scalar-generic so they can be differentiated with
// Dual<N>; the plain functions below validate inputs and work on doubles.

#include <Eigen/Core>

#include "lqmhpe/attitude.hpp"
#include "lqmhpe/model.hpp"

namespace lqmhpe {

template <typename T>
StateVec<T> derivative_kernel(const StateVec<T>& x, const InputVec<T>& u,
                              const ParamVec<T>& theta, const Eigen::Vector3d& gravity) {
  namespace ti = theta_index;
  using S = T;
  const Quaternion<S> q(x[kQuat], x[kQuat + 1], x[kQuat + 2], x[kQuat + 3]);
  const Eigen::Matrix<S, 3, 1> v = x.template segment<3>(kVel);
  const Eigen::Matrix<S, 3, 1> w = x.template segment<3>(kOmega);
  const Eigen::Matrix<S, 3, 3> rot = rotation_matrix(q);

  const S mass = S(theta[ti::kMass]);
  const S ixx = S(theta[ti::kInertia]);
  const S iyy = S(theta[ti::kInertia + 1]);
  const S izz = S(theta[ti::kInertia + 2]);

  S thrust = S(0.0);
  S roll = S(0.0), pitch = S(0.0), yaw = S(0.0);
  for (int i = 0; i < kRotors; ++i) {
    thrust += u[i];
    roll += S(theta[ti::kArmY + i]) * u[i];
    pitch -= S(theta[ti::kArmX + i]) * u[i];
    const S b = S(theta[ti::kTorqueRatio + i]);
    yaw += (i % 2 == 0) ? S(-(b * u[i])) : S(b * u[i]);
  }

  StateVec<T> dx;
  dx.template segment<3>(kPos) = rot * v;
  dx.template segment<4>(kQuat) = S(0.5) * (attitude_jacobian(q) * w);

  Eigen::Matrix<S, 3, 1> force;
  force << -S(theta[ti::kDrag]) * v[0], -S(theta[ti::kDrag + 1]) * v[1],
      thrust - S(theta[ti::kDrag + 2]) * v[2];
  dx.template segment<3>(kVel) =
      rot.transpose() * gravity.template cast<S>() + force / mass - hat(w) * v;

  // w x J w with diagonal J.
  dx[kOmega] = (roll - (izz - iyy) * w[1] * w[2]) / ixx;
  dx[kOmega + 1] = (pitch - (ixx - izz) * w[0] * w[2]) / iyy;
  dx[kOmega + 2] = (yaw - (iyy - ixx) * w[0] * w[1]) / izz;
  return dx;
}

/// Classic RK4 of an autonomous vector field `f(x)` over one step, followed by
/// quaternion renormalization.
template <typename T, typename F>
StateVec<T> rk4_integrate(const F& f, const StateVec<T>& x, double dt) {
  const StateVec<T> k1 = f(x);
  const StateVec<T> k2 = f(StateVec<T>(x + (0.5 * dt) * k1));
  const StateVec<T> k3 = f(StateVec<T>(x + (0.5 * dt) * k2));
  const StateVec<T> k4 = f(StateVec<T>(x + dt * k3));
  StateVec<T> next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  normalize_quaternion_block(next.template segment<4>(kQuat));
  return next;
}

template <typename T>
StateVec<T> rk4_kernel(const StateVec<T>& x, const InputVec<T>& u, const ParamVec<T>& theta,
                       const Eigen::Vector3d& gravity, double dt) {
  return rk4_integrate<T>(
      [&](const StateVec<T>& s) { return derivative_kernel<T>(s, u, theta, gravity); }, x, dt);
}

/// Continuous-time dynamics f(x, u, theta).
StateVector derivative(const StateVector& x, const InputVector& u, const NominalParams& theta,
                       const Eigen::Vector3d& gravity = Eigen::Vector3d(0.0, 0.0, -9.81));

/// One RK4 step plus quaternion renormalization. Requires dt > 0.
StateVector rk4_step(const StateVector& x, const InputVector& u, const NominalParams& theta,
                     double dt, const Eigen::Vector3d& gravity = Eigen::Vector3d(0.0, 0.0, -9.81));

/// One forward-Euler step plus quaternion renormalization. Requires dt > 0.
StateVector euler_step(const StateVector& x, const InputVector& u, const NominalParams& theta,
                       double dt,
                       const Eigen::Vector3d& gravity = Eigen::Vector3d(0.0, 0.0, -9.81));

/// Which state channels receive additive disturbances.
enum class DisturbanceChannels {
  kTranslationalAndRates,  // p, v, omega (10 entries); quaternion untouched
  kAll,                    // all 13 entries, quaternion renormalized afterwards
};

/// x + w on the selected channels.
StateVector add_disturbance(const StateVector& x, const Disturbance& w,
                            DisturbanceChannels channels = DisturbanceChannels::kTranslationalAndRates);

/// Mask with ones on the channels that `channels` perturbs.
Disturbance disturbance_mask(DisturbanceChannels channels);

}  // namespace lqmhpe
