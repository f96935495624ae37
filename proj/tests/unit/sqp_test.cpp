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

#include "lqmhpe/sqp.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "lqmhpe/derivatives.hpp"
#include "lqmhpe/dynamics.hpp"
#include "lqmhpe/qp_solver.hpp"
#include "test_util.hpp"

namespace lqmhpe::nlp {
namespace {

NlpProblem unconstrained(int n) {
  NlpProblem p;
  p.num_variables = n;
  p.initial_guess = Vector::Zero(n);
  p.lower = Vector::Constant(n, -qp::kInfinity);
  p.upper = Vector::Constant(n, qp::kInfinity);
  return p;
}

double rosenbrock(double x, double y) { return (1 - x) * (1 - x) + 100 * (y - x * x) * (y - x * x); }

NlpProblem rosenbrock_problem() {
  NlpProblem p = unconstrained(2);
  p.initial_guess = Vector(2);
  p.initial_guess << -1.2, 1.0;
  p.lower = Vector::Constant(2, -2.0);
  p.upper = Vector::Constant(2, 2.0);
  // Least-squares form: r = (1 - x, 10 (y - x^2)).
  p.residual = [](const Vector& z) {
    Vector r(2);
    r << 1 - z[0], 10 * (z[1] - z[0] * z[0]);
    return r;
  };
  p.residual_jacobian = [](const Vector& z) {
    Eigen::MatrixXd j(2, 2);
    j << -1, 0, -20 * z[0], 10;
    return SparseMatrix(j.sparseView());
  };
  return p;
}

TEST(SolveNlp, ShiftedQuadratic) {
  NlpProblem p = unconstrained(1);
  p.objective = [](const Vector& x) { return (x[0] - 3) * (x[0] - 3); };
  p.gradient = [](const Vector& x) { return Vector::Constant(1, 2 * (x[0] - 3)); };
  const SqpResult r = solve_nlp(p);
  ASSERT_EQ(r.status, SqpStatus::kConverged);
  EXPECT_NEAR(r.x[0], 3.0, 1e-8);
}

TEST(SolveNlp, ActiveLowerBound) {
  NlpProblem p = unconstrained(1);
  p.initial_guess = Vector::Constant(1, 5.0);
  p.lower = Vector::Constant(1, 1.0);
  p.objective = [](const Vector& x) { return x[0] * x[0]; };
  p.gradient = [](const Vector& x) { return Vector::Constant(1, 2 * x[0]); };
  const SqpResult r = solve_nlp(p);
  ASSERT_EQ(r.status, SqpStatus::kConverged);
  EXPECT_NEAR(r.x[0], 1.0, 1e-8);
}

TEST(SolveNlp, RosenbrockInBox) {
  const SqpResult r = solve_nlp(rosenbrock_problem());
  ASSERT_EQ(r.status, SqpStatus::kConverged);
  EXPECT_NEAR(r.x[0], 1.0, 1e-6);
  EXPECT_NEAR(r.x[1], 1.0, 1e-6);
  // Grid refinement around the best grid point finds nothing lower.
  double bx = 0, by = 0, best = 1e300, h = 0.05;
  for (double x = -2; x <= 2; x += h) {
    for (double y = -2; y <= 2; y += h) {
      if (rosenbrock(x, y) < best) best = rosenbrock(x, y), bx = x, by = y;
    }
  }
  for (int level = 0; level < 30; ++level) {
    const double cx = bx, cy = by;
    for (int i = -10; i <= 10; ++i) {
      for (int j = -10; j <= 10; ++j) {
        const double x = cx + i * h / 10, y = cy + j * h / 10;
        if (rosenbrock(x, y) < best) best = rosenbrock(x, y), bx = x, by = y;
      }
    }
    h /= 5;
  }
  EXPECT_NEAR(bx, r.x[0], 1e-6);
  EXPECT_NEAR(by, r.x[1], 1e-6);
}

TEST(SolveNlp, MeritNonIncreasingWithEqualityConstraint) {
  // min (x-2)^2 + (y-1)^2 s.t. x^2 + y^2 = 1.
  NlpProblem p = unconstrained(2);
  p.initial_guess = Vector(2);
  p.initial_guess << 0.1, -0.9;
  p.objective = [](const Vector& z) { return (z[0] - 2) * (z[0] - 2) + (z[1] - 1) * (z[1] - 1); };
  p.gradient = [](const Vector& z) {
    Vector g(2);
    g << 2 * (z[0] - 2), 2 * (z[1] - 1);
    return g;
  };
  p.equality = [](const Vector& z) { return Vector::Constant(1, z.squaredNorm() - 1); };
  p.equality_jacobian = [](const Vector& z) {
    Eigen::MatrixXd j(1, 2);
    j << 2 * z[0], 2 * z[1];
    return SparseMatrix(j.sparseView());
  };
  const SqpResult r = solve_nlp(p);
  ASSERT_EQ(r.status, SqpStatus::kConverged);
  const Eigen::Vector2d expected = Eigen::Vector2d(2, 1).normalized();
  EXPECT_NEAR(r.x[0], expected[0], 1e-6);
  EXPECT_NEAR(r.x[1], expected[1], 1e-6);
  ASSERT_FALSE(r.merit_decrease.empty());
  for (double d : r.merit_decrease) EXPECT_GE(d, 0.0);
}

TEST(SolveNlp, ConvexQpMatchesQpSolver) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1, 1);
  const int n = 5, m = 3;
  Eigen::MatrixXd L = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return u(rng); });
  const Eigen::MatrixXd P = L * L.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
  const Vector q = Vector::NullaryExpr(n, [&] { return 3 * u(rng); });
  const Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(m, n, [&] { return u(rng); });
  const Vector b = Vector::Constant(m, 0.2);

  qp::QpProblem qpp;
  qpp.P = P.sparseView();
  qpp.q = q;
  qpp.A = A.sparseView();
  qpp.l = Vector::Constant(m, -qp::kInfinity);
  qpp.u = b;
  const qp::QpSolution ref = qp::solve(qpp, qp::settings_with_tolerance(1e-10, 50000));
  ASSERT_EQ(ref.status, qp::QpStatus::kSolved);

  NlpProblem p = unconstrained(n);
  p.objective = [&](const Vector& x) { return 0.5 * x.dot(P * x) + q.dot(x); };
  p.gradient = [&](const Vector& x) { return Vector(P * x + q); };
  p.inequality = [&](const Vector& x) { return Vector(A * x - b); };
  p.inequality_jacobian = [&](const Vector&) { return SparseMatrix(A.sparseView()); };
  const SqpResult r = solve_nlp(p);
  ASSERT_EQ(r.status, SqpStatus::kConverged);
  EXPECT_LE((r.x - ref.x).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Jacobian, IdentityMap) {
  const Eigen::Vector3d x(1, 2, 3);
  const auto id = [](const auto& z) { return z; };
  EXPECT_TRUE(jacobian_ad<3>(id, x).isApprox(Eigen::Matrix3d::Identity(), 0.0));
}

TEST(Jacobian, LinearMapIsExact) {
  Eigen::Matrix3d A;
  A << 1, -2, 3.5, 0.25, 7, -1, 2, 2, 2;
  const auto f = [&](const auto& z) {
    using T = typename std::decay_t<decltype(z)>::Scalar;
    return Eigen::Matrix<T, 3, 1>(A.cast<T>() * z);
  };
  EXPECT_TRUE(jacobian_ad<3>(f, Eigen::Vector3d(0.3, -1, 4)).isApprox(A, 0.0));
}

TEST(Jacobian, Rk4StateBlockAgreesWithFiniteDifferences) {
  std::mt19937_64 rng(32);
  const ModelSpec m = crazyflie();
  const ParamVector theta = m.params.to_vector();
  const InputVector u = test::random_input(rng, m.max_thrust);
  const auto step = [&](const auto& x) {
    using T = typename std::decay_t<decltype(x)>::Scalar;
    return rk4_kernel<T>(x, u.cast<T>(), theta.cast<T>(), m.gravity, 0.02);
  };
  for (int k = 0; k < 20; ++k) {
    const StateVector x = test::random_state(rng);
    const Eigen::MatrixXd ad = jacobian_ad<kStateDim>(step, x);
    const Eigen::MatrixXd fd =
        jacobian_fd<kStateDim>(step, x, default_fd_steps<kStateDim>(x, 1e-6));
    EXPECT_LE((ad - fd).cwiseAbs().maxCoeff() / ad.cwiseAbs().maxCoeff(), 1e-5);
  }
}

}  // namespace
}  // namespace lqmhpe::nlp
