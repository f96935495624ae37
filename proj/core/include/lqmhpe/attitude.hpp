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

// Quaternion and SO(3) kernels. Convention: scalar-first (w, x, y, z),
// Hamilton product, rotation_matrix(q) maps body-frame vectors to the
// inertial frame. All functions are templated on the scalar so the same
// code runs on double and on Dual<N>.

#include <cmath>

#include <Eigen/Core>

namespace lqmhpe {

template <typename T>
struct Quaternion {
  T w{1.0};
  T x{0.0};
  T y{0.0};
  T z{0.0};

  Quaternion() = default;
  Quaternion(T w_, T x_, T y_, T z_) : w(w_), x(x_), y(y_), z(z_) {}

  template <typename Derived>
  static Quaternion from_vector(const Eigen::MatrixBase<Derived>& v) {
    return Quaternion(v[0], v[1], v[2], v[3]);
  }

  static Quaternion identity() { return Quaternion(); }

  Eigen::Matrix<T, 4, 1> to_vector() const {
    Eigen::Matrix<T, 4, 1> v;
    v << w, x, y, z;
    return v;
  }

  T squared_norm() const { return w * w + x * x + y * y + z * z; }

  T norm() const {
    using std::sqrt;
    return sqrt(squared_norm());
  }

  Quaternion normalized() const {
    const T n = norm();
    return Quaternion(w / n, x / n, y / n, z / n);
  }

  Quaternion operator-() const { return Quaternion(-w, -x, -y, -z); }
};

using Quaterniond = Quaternion<double>;

/// Project a 4-vector block back onto the unit sphere. Unconditional, so the
/// map stays differentiable at points that already have unit norm.
template <typename Derived>
void normalize_quaternion_block(Eigen::MatrixBase<Derived>&& q4) {
  using std::sqrt;
  using Scalar = typename Derived::Scalar;
  const Scalar n = sqrt(q4.squaredNorm());
  q4 /= n;
}

/// Body-to-inertial rotation matrix. Orthonormal only for unit `q`; the
/// homogeneous form is kept so that intermediate integrator stages (which are
/// slightly off the unit sphere) stay smooth.
template <typename T>
Eigen::Matrix<T, 3, 3> rotation_matrix(const Quaternion<T>& q) {
  const T ww = q.w * q.w, xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
  const T xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
  const T wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
  Eigen::Matrix<T, 3, 3> r;
  r(0, 0) = ww + xx - yy - zz;
  r(0, 1) = T(2.0) * (xy - wz);
  r(0, 2) = T(2.0) * (xz + wy);
  r(1, 0) = T(2.0) * (xy + wz);
  r(1, 1) = ww - xx + yy - zz;
  r(1, 2) = T(2.0) * (yz - wx);
  r(2, 0) = T(2.0) * (xz - wy);
  r(2, 1) = T(2.0) * (yz + wx);
  r(2, 2) = ww - xx - yy + zz;
  return r;
}

/// Attitude Jacobian G(q): d/dt q = 1/2 G(q) omega for body rates omega.
template <typename T>
Eigen::Matrix<T, 4, 3> attitude_jacobian(const Quaternion<T>& q) {
  Eigen::Matrix<T, 4, 3> g;
  g << -q.x, -q.y, -q.z,
        q.w, -q.z,  q.y,
        q.z,  q.w, -q.x,
       -q.y,  q.x,  q.w;
  return g;
}

/// Skew-symmetric matrix with hat(v) * u == v.cross(u).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 3, 3> hat(const Eigen::MatrixBase<Derived>& v) {
  using T = typename Derived::Scalar;
  Eigen::Matrix<T, 3, 3> m;
  m << T(0.0), -v[2], v[1],
       v[2], T(0.0), -v[0],
       -v[1], v[0], T(0.0);
  return m;
}

}  // namespace lqmhpe
