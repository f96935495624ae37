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

// Small dense helpers shared by the planner and the estimators.

#include <algorithm>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

namespace lqmhpe::detail {

/// Principal square root of a symmetric PSD matrix (negative eigenvalues
/// clipped to zero).
template <int N>
Eigen::Matrix<double, N, N> symmetric_sqrt(const Eigen::Matrix<double, N, N>& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> es(m);
  const Eigen::Matrix<double, N, 1> d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

/// Symmetric and positive semidefinite up to a relative 1e-12.
template <int N>
bool is_psd(const Eigen::Matrix<double, N, N>& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> es(m);
  return es.eigenvalues().minCoeff() >= -1e-12 * scale;
}

}  // namespace lqmhpe::detail
