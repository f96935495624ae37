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

// Jacobians of scalar-generic vector functions, by forward-mode dual numbers
// or by central finite differences. A function is passed as a generic lambda
// `[](const auto& x) { ... }` that maps Eigen::Matrix<T, N, 1> to a column
// vector of T for T = double and T = Dual<N>.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "lqmhpe/dual.hpp"

namespace lqmhpe::nlp {

enum class DerivativeMode { kForwardAD, kCentralDifference };

/// Seed x as N independent dual variables.
template <int N>
Eigen::Matrix<Dual<N>, N, 1> seed(const Eigen::Matrix<double, N, 1>& x) {
  Eigen::Matrix<Dual<N>, N, 1> d;
  for (int i = 0; i < N; ++i) d[i] = Dual<N>::variable(x[i], i);
  return d;
}

template <int N, typename Derived>
Eigen::MatrixXd extract_jacobian(const Eigen::MatrixBase<Derived>& y) {
  Eigen::MatrixXd jac(y.size(), N);
  for (Eigen::Index r = 0; r < y.size(); ++r) jac.row(r) = y[r].grad.transpose();
  return jac;
}

template <typename Derived>
Eigen::VectorXd extract_value(const Eigen::MatrixBase<Derived>& y) {
  Eigen::VectorXd v(y.size());
  for (Eigen::Index r = 0; r < y.size(); ++r) v[r] = value_of(y[r]);
  return v;
}

/// Forward-mode Jacobian of f at x.
template <int N, typename F>
Eigen::MatrixXd jacobian_ad(const F& f, const Eigen::Matrix<double, N, 1>& x) {
  const auto y = f(seed<N>(x));
  return extract_jacobian<N>(y);
}

/// Central-difference Jacobian with per-coordinate step h_j.
template <int N, typename F>
Eigen::MatrixXd jacobian_fd(const F& f, const Eigen::Matrix<double, N, 1>& x,
                            const Eigen::Matrix<double, N, 1>& steps) {
  const Eigen::VectorXd y0 = f(x);
  Eigen::MatrixXd jac(y0.size(), N);
  for (int j = 0; j < N; ++j) {
    Eigen::Matrix<double, N, 1> xp = x, xm = x;
    xp[j] += steps[j];
    xm[j] -= steps[j];
    const Eigen::VectorXd yp = f(xp);
    const Eigen::VectorXd ym = f(xm);
    jac.col(j) = (yp - ym) / (xp[j] - xm[j]);
  }
  return jac;
}

/// Default central-difference steps: h * max(1, |x_j|).
template <int N>
Eigen::Matrix<double, N, 1> default_fd_steps(const Eigen::Matrix<double, N, 1>& x, double h) {
  return (x.cwiseAbs().cwiseMax(1.0) * h).eval();
}

/// Jacobian/value provider for a scalar-generic function of N inputs.
template <int N, typename F>
class DerivativeProvider {
 public:
  explicit DerivativeProvider(F f, DerivativeMode mode = DerivativeMode::kForwardAD,
                              double fd_step = 1e-6)
      : f_(std::move(f)), mode_(mode), fd_step_(fd_step) {}

  DerivativeMode mode() const { return mode_; }

  Eigen::VectorXd value(const Eigen::VectorXd& x) const { return f_(fixed(x)); }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const {
    const Eigen::Matrix<double, N, 1> xf = fixed(x);
    if (mode_ == DerivativeMode::kForwardAD) return jacobian_ad<N>(f_, xf);
    return jacobian_fd<N>(f_, xf, default_fd_steps<N>(xf, fd_step_));
  }

  /// Jacobian with caller-chosen finite-difference steps (ignored in AD mode).
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& fd_steps) const {
    const Eigen::Matrix<double, N, 1> xf = fixed(x);
    if (mode_ == DerivativeMode::kForwardAD) return jacobian_ad<N>(f_, xf);
    if (fd_steps.size() != N) throw std::invalid_argument("jacobian: step vector size mismatch");
    return jacobian_fd<N>(f_, xf, Eigen::Matrix<double, N, 1>(fd_steps));
  }

  /// Gradient of a scalar-valued function (single output row).
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
    const Eigen::MatrixXd j = jacobian(x);
    if (j.rows() != 1) throw std::invalid_argument("gradient: function is not scalar-valued");
    return j.row(0).transpose();
  }

 private:
  static Eigen::Matrix<double, N, 1> fixed(const Eigen::VectorXd& x) {
    if (x.size() != N) {
      throw std::invalid_argument("jacobian: expected " + std::to_string(N) + " inputs, got " +
                                  std::to_string(x.size()));
    }
    return x;
  }

  F f_;
  DerivativeMode mode_;
  double fd_step_;
};

template <int N, typename F>
DerivativeProvider<N, F> make_derivative_provider(F f,
                                                  DerivativeMode mode = DerivativeMode::kForwardAD,
                                                  double fd_step = 1e-6) {
  return DerivativeProvider<N, F>(std::move(f), mode, fd_step);
}

}  // namespace lqmhpe::nlp
