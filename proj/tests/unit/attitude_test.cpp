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

#include "lqmhpe/attitude.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "test_util.hpp"

namespace lqmhpe {
namespace {

Quaterniond from4(const Eigen::Vector4d& v) { return Quaterniond(v[0], v[1], v[2], v[3]); }

TEST(RotationMatrix, IdentityQuaternion) {
  EXPECT_TRUE(rotation_matrix(Quaterniond::identity()).isApprox(Eigen::Matrix3d::Identity(), 0.0));
}

TEST(RotationMatrix, HalfTurnAboutZ) {
  const Eigen::Matrix3d r = rotation_matrix(Quaterniond(0.0, 0.0, 0.0, 1.0));
  EXPECT_TRUE(r.isApprox(Eigen::Vector3d(-1.0, -1.0, 1.0).asDiagonal().toDenseMatrix(), 0.0));
}

TEST(RotationMatrix, OrthogonalAndMatchesEigenOnRandomQuaternions) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 10000; ++k) {
    const Eigen::Vector4d v = test::random_unit_quaternion(rng);
    const Eigen::Matrix3d r = rotation_matrix(from4(v));
    EXPECT_LE((r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
    const Eigen::Quaterniond eq(v[0], v[1], v[2], v[3]);
    EXPECT_LE((r - eq.toRotationMatrix()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(AttitudeJacobian, PureYawAtIdentity) {
  const Eigen::Vector4d qdot =
      0.5 * attitude_jacobian(Quaterniond::identity()) * Eigen::Vector3d(0.0, 0.0, 1.0);
  EXPECT_TRUE(qdot.isApprox(Eigen::Vector4d(0.0, 0.0, 0.0, 0.5), 0.0));
}

TEST(AttitudeJacobian, ColumnsOrthogonalToQuaternion) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 10000; ++k) {
    const Eigen::Vector4d v = test::random_unit_quaternion(rng);
    EXPECT_LE((v.transpose() * attitude_jacobian(from4(v))).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(AttitudeJacobian, MatchesHamiltonProductKinematics) {
  // qdot = 1/2 q (x) (0, omega) with the Hamilton product from Eigen.
  std::mt19937_64 rng(3);
  for (int k = 0; k < 1000; ++k) {
    const Eigen::Vector4d v = test::random_unit_quaternion(rng);
    const Eigen::Vector3d w(test::uniform(rng, -3, 3), test::uniform(rng, -3, 3),
                            test::uniform(rng, -3, 3));
    const Eigen::Quaterniond prod =
        Eigen::Quaterniond(v[0], v[1], v[2], v[3]) * Eigen::Quaterniond(0.0, w[0], w[1], w[2]);
    const Eigen::Vector4d expected = 0.5 * Eigen::Vector4d(prod.w(), prod.x(), prod.y(), prod.z());
    EXPECT_LE((0.5 * attitude_jacobian(from4(v)) * w - expected).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(AttitudeJacobian, FullYawTurnReturnsToStart) {
  Eigen::Vector4d q(1.0, 0.0, 0.0, 0.0);
  const Eigen::Vector3d w(0.0, 0.0, 2.0 * std::numbers::pi);
  const double h = 1e-4;
  for (int k = 0; k < 10000; ++k) {
    q += h * 0.5 * attitude_jacobian(from4(q)) * w;
    normalize_quaternion_block(q.segment<4>(0));
  }
  const double err = std::min((q - Eigen::Vector4d(1, 0, 0, 0)).norm(),
                              (q + Eigen::Vector4d(1, 0, 0, 0)).norm());
  EXPECT_LT(err, 1e-2);
}

TEST(Hat, ZeroVector) { EXPECT_TRUE(hat(Eigen::Vector3d::Zero().eval()).isZero(0.0)); }

TEST(Hat, RightHandRule) {
  EXPECT_TRUE((hat(Eigen::Vector3d::UnitX().eval()) * Eigen::Vector3d::UnitY())
                  .isApprox(Eigen::Vector3d::UnitZ(), 0.0));
}

TEST(Hat, MatchesCrossProductAndIsSkew) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 1000; ++k) {
    const Eigen::Vector3d v = Eigen::Vector3d::NullaryExpr([&] { return test::uniform(rng, -1, 1); });
    const Eigen::Vector3d u = Eigen::Vector3d::NullaryExpr([&] { return test::uniform(rng, -1, 1); });
    EXPECT_LE((hat(v) * u - v.cross(u)).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_TRUE((hat(v) + hat(v).transpose()).isZero(0.0));
  }
}

TEST(Normalize, ProjectsOntoUnitSphere) {
  Eigen::Vector4d q(2.0, 0.0, 0.0, 0.0);
  normalize_quaternion_block(q.segment<4>(0));
  EXPECT_DOUBLE_EQ(q.norm(), 1.0);
}

}  // namespace
}  // namespace lqmhpe
