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

#include <random>

#include <Eigen/Core>

#include "lqmhpe/model.hpp"

namespace lqmhpe::test {

/// Unit quaternion from a normalized Gaussian 4-vector.
inline Eigen::Vector4d random_unit_quaternion(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector4d q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized();
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline StateVector random_state(std::mt19937_64& rng, double pos = 5.0, double vel = 2.5,
                                double rate = 2.5) {
  StateVector x;
  for (int i = 0; i < 3; ++i) x[kPos + i] = uniform(rng, -pos, pos);
  x.segment<4>(kQuat) = random_unit_quaternion(rng);
  for (int i = 0; i < 3; ++i) x[kVel + i] = uniform(rng, -vel, vel);
  for (int i = 0; i < 3; ++i) x[kOmega + i] = uniform(rng, -rate, rate);
  return x;
}

inline InputVector random_input(std::mt19937_64& rng, double umax) {
  InputVector u;
  for (int i = 0; i < kInputDim; ++i) u[i] = uniform(rng, 0.0, umax);
  return u;
}

/// theta with every entry scaled by an independent factor in [lo, hi].
inline NominalParams random_params(std::mt19937_64& rng, const NominalParams& nominal,
                                   double lo = 0.5, double hi = 1.5) {
  ParamVector t = nominal.to_vector();
  for (int i = 0; i < kParamDim; ++i) t[i] *= uniform(rng, lo, hi);
  return NominalParams::from_vector(t);
}

}  // namespace lqmhpe::test
