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

#include <array>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "lqmhpe/attitude.hpp"

namespace lqmhpe {

inline constexpr int kRotors = 4;
inline constexpr int kStateDim = 13;
inline constexpr int kInputDim = kRotors;
inline constexpr int kParamDim = 7 + 3 * kRotors;

// Flattened state layout: (p, q, v, omega).
inline constexpr int kPos = 0;
inline constexpr int kQuat = 3;
inline constexpr int kVel = 7;
inline constexpr int kOmega = 10;

template <typename T>
using StateVec = Eigen::Matrix<T, kStateDim, 1>;
template <typename T>
using InputVec = Eigen::Matrix<T, kInputDim, 1>;
template <typename T>
using ParamVec = Eigen::Matrix<T, kParamDim, 1>;

using StateVector = StateVec<double>;
using InputVector = InputVec<double>;
using ParamVector = ParamVec<double>;
using Disturbance = StateVector;

/// Raised for non-physical parameter values (non-positive mass or inertia).
class InvalidParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Multirotor state: inertial position, attitude, body velocity, body rates.
struct State {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Quaterniond attitude;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d angular_velocity = Eigen::Vector3d::Zero();

  StateVector flatten() const;
  static State unflatten(const StateVector& x);
};

/// Origin of the state space: zero position and rates, identity attitude.
StateVector hover_state();

/// Physical parameters theta = [mu, iota, a, b, c, d].
///
/// b holds the yaw torque-to-thrust ratios, c the body-frame horizontal rotor
/// positions and d the body-frame vertical rotor positions. Rotor i produces
/// roll torque d_i u_i, pitch torque -c_i u_i, and yaw torque -/+ b_i u_i with
/// the sign alternating from negative on rotor 1.
struct NominalParams {
  double mass = 1.0;
  Eigen::Vector3d inertia = Eigen::Vector3d::Ones();
  Eigen::Vector3d drag = Eigen::Vector3d::Zero();
  InputVector torque_ratio = InputVector::Zero();
  InputVector arm_x = InputVector::Zero();
  InputVector arm_y = InputVector::Zero();

  ParamVector to_vector() const;
  static NominalParams from_vector(const ParamVector& theta);

  /// Throws InvalidParameterError unless mass and inertias are positive and
  /// drag coefficients non-negative.
  void validate() const;
};

// Offsets into the flattened theta vector.
namespace theta_index {
inline constexpr int kMass = 0;
inline constexpr int kInertia = 1;
inline constexpr int kDrag = 4;
inline constexpr int kTorqueRatio = 7;
inline constexpr int kArmX = 7 + kRotors;
inline constexpr int kArmY = 7 + 2 * kRotors;
}  // namespace theta_index

/// Bundles a parameter set with the simulation constants used around it.
struct ModelSpec {
  std::string name;
  NominalParams params;
  Eigen::Vector3d gravity{0.0, 0.0, -9.81};
  double max_thrust = 0.0;  // per rotor [N]

  double hover_thrust() const;
};

/// Per-rotor thrust that balances gravity for a vehicle of mass `mass`.
double hover_thrust(double mass, const Eigen::Vector3d& gravity);

/// Crazyflie parameter set.
ModelSpec crazyflie();
/// Fusion 1 parameter set.
ModelSpec fusion1();
/// Lookup by name ("crazyflie" or "fusion1"). Throws std::invalid_argument.
ModelSpec model_by_name(const std::string& name);

/// Default per-rotor thrust ceiling as a multiple of hover thrust.
inline constexpr double kDefaultThrustMargin = 2.5;

}  // namespace lqmhpe
