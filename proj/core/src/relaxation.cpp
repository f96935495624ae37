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

#include "lqmhpe/relaxation.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <stdexcept>

namespace lqmhpe {

namespace ri = relaxed_index;
namespace ti = theta_index;

ParamVector RelaxedParams::to_vector() const {
  ParamVector v;
  v[ri::kInvMass] = inv_mass;
  v.segment<3>(ri::kDragRate) = drag_rate;
  v.segment<kRotors>(ri::kRoll) = roll_gain;
  v.segment<kRotors>(ri::kPitch) = pitch_gain;
  v.segment<kRotors>(ri::kYaw) = yaw_gain;
  v.segment<3>(ri::kInertiaRatio) = inertia_ratio;
  return v;
}

RelaxedParams RelaxedParams::from_vector(const ParamVector& v) {
  RelaxedParams r;
  r.inv_mass = v[ri::kInvMass];
  r.drag_rate = v.segment<3>(ri::kDragRate);
  r.roll_gain = v.segment<kRotors>(ri::kRoll);
  r.pitch_gain = v.segment<kRotors>(ri::kPitch);
  r.yaw_gain = v.segment<kRotors>(ri::kYaw);
  r.inertia_ratio = v.segment<3>(ri::kInertiaRatio);
  return r;
}

RelaxedParams relax(const NominalParams& theta) {
  if (!(theta.mass > 0.0) || !(theta.inertia.array() > 0.0).all()) {
    throw InvalidParameterError("relax: mass and inertias must be positive");
  }
  const double ixx = theta.inertia[0], iyy = theta.inertia[1], izz = theta.inertia[2];
  RelaxedParams r;
  r.inv_mass = 1.0 / theta.mass;
  r.drag_rate = theta.drag / theta.mass;
  r.roll_gain = theta.arm_y / ixx;
  r.pitch_gain = theta.arm_x / iyy;
  r.yaw_gain = theta.torque_ratio / izz;
  r.inertia_ratio << (izz - iyy) / ixx, (ixx - izz) / iyy, (iyy - ixx) / izz;
  return r;
}

double implied_mass(const ParamVector& vartheta) { return 1.0 / vartheta[ri::kInvMass]; }

StateVector drift(const StateVector& x, const Eigen::Vector3d& gravity) {
  return drift_kernel<double>(x, gravity);
}

Eigen::Matrix<double, kStateDim, kParamDim> input_matrix(const StateVector& x,
                                                         const InputVector& u) {
  return input_matrix_kernel<double>(x, u);
}

StateVector affine_euler_update(const StateVector& x, const InputVector& u,
                                const ParamVector& vartheta, const Disturbance& w, double dt,
                                const Eigen::Vector3d& gravity) {
  return x + dt * (drift_kernel<double>(x, gravity) + input_matrix_kernel<double>(x, u) * vartheta + w);
}

StateVector affine_euler_step(const StateVector& x, const InputVector& u,
                              const ParamVector& vartheta, const Disturbance& w, double dt,
                              const Eigen::Vector3d& gravity) {
  if (!(dt >= 0.0)) throw std::invalid_argument("affine_euler_step: dt must be non-negative");
  StateVector next = affine_euler_update(x, u, vartheta, w, dt, gravity);
  if (dt > 0.0) normalize_quaternion_block(next.segment<4>(kQuat));
  return next;
}

bool ParamBox::contains(const ParamVector& p, double slack) const {
  return ((p - lower).array() >= -slack).all() && ((upper - p).array() >= -slack).all();
}

ParamVector ParamBox::clamp(const ParamVector& p) const { return p.cwiseMax(lower).cwiseMin(upper); }

void ParamBox::validate() const {
  if (!(lower.array() <= upper.array()).all()) {
    throw std::invalid_argument("parameter box has lower > upper");
  }
}

ParamBox scaled_box(const NominalParams& theta0, double lower_factor, double upper_factor) {
  const ParamVector t = theta0.to_vector();
  ParamBox box;
  box.space = ParamSpace::kNominal;
  box.lower = (lower_factor * t).cwiseMin(upper_factor * t);
  box.upper = (lower_factor * t).cwiseMax(upper_factor * t);
  return box;
}

namespace {

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void include(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
};

// num / den over the 4 corners; den is strictly positive so the ratio is
// monotone in each argument and the corners are exact.
Range ratio_range(double num_lo, double num_hi, double den_lo, double den_hi) {
  Range r;
  for (double n : {num_lo, num_hi}) {
    for (double d : {den_lo, den_hi}) r.include(n / d);
  }
  return r;
}

// (a - b) / c over the 8 corners. Linear in (a, b) for fixed c and monotone in
// c for fixed numerator, so the extremes sit on corners even when a - b
// changes sign inside the box.
Range difference_ratio_range(double a_lo, double a_hi, double b_lo, double b_hi, double c_lo,
                             double c_hi) {
  Range r;
  for (double a : {a_lo, a_hi}) {
    for (double b : {b_lo, b_hi}) {
      for (double c : {c_lo, c_hi}) r.include((a - b) / c);
    }
  }
  return r;
}

}  // namespace

ParamBox transform_bounds(const ParamBox& theta_box) {
  theta_box.validate();
  const ParamVector& lo = theta_box.lower;
  const ParamVector& hi = theta_box.upper;
  if (!(lo[ti::kMass] > 0.0) || !(lo.segment<3>(ti::kInertia).array() > 0.0).all()) {
    throw std::invalid_argument("transform_bounds: mass and inertia bounds must be positive");
  }

  ParamBox out;
  out.space = ParamSpace::kRelaxed;
  auto set = [&](int index, const Range& r) {
    out.lower[index] = r.lo;
    out.upper[index] = r.hi;
  };

  const double m_lo = lo[ti::kMass], m_hi = hi[ti::kMass];
  set(ri::kInvMass, ratio_range(1.0, 1.0, m_lo, m_hi));
  for (int i = 0; i < 3; ++i) {
    set(ri::kDragRate + i, ratio_range(lo[ti::kDrag + i], hi[ti::kDrag + i], m_lo, m_hi));
  }

  const int ixx = ti::kInertia, iyy = ti::kInertia + 1, izz = ti::kInertia + 2;
  for (int i = 0; i < kRotors; ++i) {
    set(ri::kRoll + i, ratio_range(lo[ti::kArmY + i], hi[ti::kArmY + i], lo[ixx], hi[ixx]));
    set(ri::kPitch + i, ratio_range(lo[ti::kArmX + i], hi[ti::kArmX + i], lo[iyy], hi[iyy]));
    set(ri::kYaw + i,
        ratio_range(lo[ti::kTorqueRatio + i], hi[ti::kTorqueRatio + i], lo[izz], hi[izz]));
  }

  set(ri::kInertiaRatio,
      difference_ratio_range(lo[izz], hi[izz], lo[iyy], hi[iyy], lo[ixx], hi[ixx]));
  set(ri::kInertiaRatio + 1,
      difference_ratio_range(lo[ixx], hi[ixx], lo[izz], hi[izz], lo[iyy], hi[iyy]));
  set(ri::kInertiaRatio + 2,
      difference_ratio_range(lo[iyy], hi[iyy], lo[ixx], hi[ixx], lo[izz], hi[izz]));
  return out;
}

}  // namespace lqmhpe
