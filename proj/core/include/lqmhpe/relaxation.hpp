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

// Affine-in-parameter form of the multirotor dynamics.
//
// With the relaxed vector
//   vartheta = [1/mu, a/mu, d/Ixx, c/Iyy, b/Izz,
//               (Izz-Iyy)/Ixx, (Ixx-Izz)/Iyy, (Iyy-Ixx)/Izz]
// the dynamics read x' = F(x) + G(x, u) vartheta, which is an exact
// re-parameterization of the nominal model.

#include <Eigen/Core>

#include "lqmhpe/attitude.hpp"
#include "lqmhpe/dynamics.hpp"
#include "lqmhpe/model.hpp"

namespace lqmhpe {

namespace relaxed_index {
inline constexpr int kInvMass = 0;
inline constexpr int kDragRate = 1;
inline constexpr int kRoll = 4;
inline constexpr int kPitch = 4 + kRotors;
inline constexpr int kYaw = 4 + 2 * kRotors;
inline constexpr int kInertiaRatio = 4 + 3 * kRotors;
}  // namespace relaxed_index

struct RelaxedParams {
  double inv_mass = 1.0;
  Eigen::Vector3d drag_rate = Eigen::Vector3d::Zero();    // a / mu
  InputVector roll_gain = InputVector::Zero();            // d / Ixx
  InputVector pitch_gain = InputVector::Zero();           // c / Iyy
  InputVector yaw_gain = InputVector::Zero();             // b / Izz
  Eigen::Vector3d inertia_ratio = Eigen::Vector3d::Zero();

  ParamVector to_vector() const;
  static RelaxedParams from_vector(const ParamVector& vartheta);
};

/// Change of variables theta -> vartheta. Throws InvalidParameterError for
/// non-positive mass or inertia.
RelaxedParams relax(const NominalParams& theta);

/// Mass implied by a relaxed vector (1 / inv_mass).
double implied_mass(const ParamVector& vartheta);

template <typename T>
StateVec<T> drift_kernel(const StateVec<T>& x, const Eigen::Vector3d& gravity) {
  const Quaternion<T> q(x[kQuat], x[kQuat + 1], x[kQuat + 2], x[kQuat + 3]);
  const Eigen::Matrix<T, 3, 1> v = x.template segment<3>(kVel);
  const Eigen::Matrix<T, 3, 1> w = x.template segment<3>(kOmega);
  const Eigen::Matrix<T, 3, 3> rot = rotation_matrix(q);
  StateVec<T> f;
  f.template segment<3>(kPos) = rot * v;
  f.template segment<4>(kQuat) = T(0.5) * (attitude_jacobian(q) * w);
  f.template segment<3>(kVel) = rot.transpose() * gravity.template cast<T>() - hat(w) * v;
  f.template segment<3>(kOmega).setZero();
  return f;
}

/// The 13 x (7+3m) input matrix G(x, u).
template <typename T>
Eigen::Matrix<T, kStateDim, kParamDim> input_matrix_kernel(const StateVec<T>& x,
                                                           const InputVec<T>& u) {
  namespace ri = relaxed_index;
  Eigen::Matrix<T, kStateDim, kParamDim> g;
  g.setZero();
  T thrust = T(0.0);
  for (int i = 0; i < kRotors; ++i) thrust += u[i];
  g(kVel + 2, ri::kInvMass) = thrust;
  for (int i = 0; i < 3; ++i) g(kVel + i, ri::kDragRate + i) = -x[kVel + i];
  for (int i = 0; i < kRotors; ++i) {
    g(kOmega, ri::kRoll + i) = u[i];
    g(kOmega + 1, ri::kPitch + i) = -u[i];
    g(kOmega + 2, ri::kYaw + i) = (i % 2 == 0) ? T(-u[i]) : T(u[i]);
  }
  const T wx = x[kOmega], wy = x[kOmega + 1], wz = x[kOmega + 2];
  g(kOmega, ri::kInertiaRatio) = -(wy * wz);
  g(kOmega + 1, ri::kInertiaRatio + 1) = -(wx * wz);
  g(kOmega + 2, ri::kInertiaRatio + 2) = -(wx * wy);
  return g;
}

/// F(x) + G(x, u) vartheta evaluated without materializing G.
template <typename T>
StateVec<T> affine_derivative_kernel(const StateVec<T>& x, const InputVec<T>& u,
                                     const ParamVec<T>& vt, const Eigen::Vector3d& gravity) {
  namespace ri = relaxed_index;
  StateVec<T> f = drift_kernel<T>(x, gravity);
  T thrust = T(0.0), roll = T(0.0), pitch = T(0.0), yaw = T(0.0);
  for (int i = 0; i < kRotors; ++i) {
    thrust += u[i];
    roll += vt[ri::kRoll + i] * u[i];
    pitch -= vt[ri::kPitch + i] * u[i];
    const T term = vt[ri::kYaw + i] * u[i];
    yaw += (i % 2 == 0) ? T(-term) : term;
  }
  for (int i = 0; i < 3; ++i) f[kVel + i] -= vt[ri::kDragRate + i] * x[kVel + i];
  f[kVel + 2] += vt[ri::kInvMass] * thrust;
  const T wx = x[kOmega], wy = x[kOmega + 1], wz = x[kOmega + 2];
  f[kOmega] = roll - vt[ri::kInertiaRatio] * wy * wz;
  f[kOmega + 1] = pitch - vt[ri::kInertiaRatio + 1] * wx * wz;
  f[kOmega + 2] = yaw - vt[ri::kInertiaRatio + 2] * wx * wy;
  return f;
}

template <typename T>
StateVec<T> affine_rk4_kernel(const StateVec<T>& x, const InputVec<T>& u, const ParamVec<T>& vt,
                              const Eigen::Vector3d& gravity, double dt) {
  return rk4_integrate<T>(
      [&](const StateVec<T>& s) { return affine_derivative_kernel<T>(s, u, vt, gravity); }, x,
      dt);
}

/// F(x).
StateVector drift(const StateVector& x,
                  const Eigen::Vector3d& gravity = Eigen::Vector3d(0.0, 0.0, -9.81));

/// G(x, u).
Eigen::Matrix<double, kStateDim, kParamDim> input_matrix(const StateVector& x,
                                                         const InputVector& u);

/// Forward-Euler step of the affine model without renormalization:
/// x + dt (F(x) + G(x,u) vartheta + w). Affine in vartheta.
StateVector affine_euler_update(const StateVector& x, const InputVector& u,
                                const ParamVector& vartheta, const Disturbance& w, double dt,
                                const Eigen::Vector3d& gravity = Eigen::Vector3d(0.0, 0.0, -9.81));

/// affine_euler_update followed by quaternion renormalization. Requires dt >= 0.
StateVector affine_euler_step(const StateVector& x, const InputVector& u,
                              const ParamVector& vartheta, const Disturbance& w, double dt,
                              const Eigen::Vector3d& gravity = Eigen::Vector3d(0.0, 0.0, -9.81));

enum class ParamSpace { kNominal, kRelaxed };

/// Axis-aligned box in theta- or vartheta-space.
struct ParamBox {
  ParamVector lower = ParamVector::Zero();
  ParamVector upper = ParamVector::Zero();
  ParamSpace space = ParamSpace::kNominal;

  bool contains(const ParamVector& p, double slack = 0.0) const;
  ParamVector clamp(const ParamVector& p) const;
  void validate() const;
};

/// [min(lo*theta0, hi*theta0), max(lo*theta0, hi*theta0)] per component, so
/// negative nominal entries keep a well-ordered interval.
ParamBox scaled_box(const NominalParams& theta0, double lower_factor, double upper_factor);

/// Tight, sound image of a theta-box under relax(): every component is the
/// min/max of its defining ratio over the corners of the constituent
/// intervals. Throws std::invalid_argument on an inverted box or one whose
/// mass/inertia interval is not strictly positive.
ParamBox transform_bounds(const ParamBox& theta_box);

}  // namespace lqmhpe
