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

/**
 * @file dual.hpp
 * @brief Forward-mode dual numbers with a fixed number of tangent directions.
 *
 * A Dual<N> carries a value and N directional derivatives. Arithmetic on
 * duals propagates the chain rule, so evaluating a templated function at
 * seeded duals yields N columns of its Jacobian in one pass.
 *
 * The NumTraits specialization at the bottom lets Eigen fixed-size matrices
 * hold Dual<N> scalars and mix them with double.
 */

#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Core>

namespace lqmhpe {

template <int N>
struct Dual {
  using Tangent = Eigen::Matrix<double, N, 1>;

  double value = 0.0;
  Tangent grad = Tangent::Zero();

  Dual() = default;
  Dual(double v) : value(v) {}  // NOLINT: implicit promotion from constants is intended
  Dual(double v, const Tangent& g) : value(v), grad(g) {}

  // Independent variable `index` with unit seed.
  static Dual variable(double v, int index) {
    Dual d(v);
    d.grad[index] = 1.0;
    return d;
  }

  Dual& operator+=(const Dual& o) {
    value += o.value;
    grad += o.grad;
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    value -= o.value;
    grad -= o.grad;
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    grad = grad * o.value + o.grad * value;
    value *= o.value;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.value;
    value *= inv;
    grad = (grad - value * o.grad) * inv;
    return *this;
  }
  Dual& operator+=(double s) {
    value += s;
    return *this;
  }
  Dual& operator-=(double s) {
    value -= s;
    return *this;
  }
  Dual& operator*=(double s) {
    value *= s;
    grad *= s;
    return *this;
  }
  Dual& operator/=(double s) {
    value /= s;
    grad /= s;
    return *this;
  }
};

template <int N>
inline Dual<N> operator-(const Dual<N>& a) {
  return Dual<N>(-a.value, -a.grad);
}
template <int N>
inline Dual<N> operator+(Dual<N> a, const Dual<N>& b) {
  return a += b;
}
template <int N>
inline Dual<N> operator-(Dual<N> a, const Dual<N>& b) {
  return a -= b;
}
template <int N>
inline Dual<N> operator*(Dual<N> a, const Dual<N>& b) {
  return a *= b;
}
template <int N>
inline Dual<N> operator/(Dual<N> a, const Dual<N>& b) {
  return a /= b;
}
template <int N>
inline Dual<N> operator+(Dual<N> a, double s) {
  return a += s;
}
template <int N>
inline Dual<N> operator+(double s, Dual<N> a) {
  return a += s;
}
template <int N>
inline Dual<N> operator-(Dual<N> a, double s) {
  return a -= s;
}
template <int N>
inline Dual<N> operator-(double s, const Dual<N>& a) {
  return Dual<N>(s - a.value, -a.grad);
}
template <int N>
inline Dual<N> operator*(Dual<N> a, double s) {
  return a *= s;
}
template <int N>
inline Dual<N> operator*(double s, Dual<N> a) {
  return a *= s;
}
template <int N>
inline Dual<N> operator/(Dual<N> a, double s) {
  return a /= s;
}
template <int N>
inline Dual<N> operator/(double s, const Dual<N>& a) {
  const double v = s / a.value;
  return Dual<N>(v, -v / a.value * a.grad);
}

// Comparisons act on the value part only.
template <int N>
inline bool operator<(const Dual<N>& a, const Dual<N>& b) {
  return a.value < b.value;
}
template <int N>
inline bool operator>(const Dual<N>& a, const Dual<N>& b) {
  return a.value > b.value;
}
template <int N>
inline bool operator<=(const Dual<N>& a, const Dual<N>& b) {
  return a.value <= b.value;
}
template <int N>
inline bool operator>=(const Dual<N>& a, const Dual<N>& b) {
  return a.value >= b.value;
}
template <int N>
inline bool operator==(const Dual<N>& a, const Dual<N>& b) {
  return a.value == b.value;
}
template <int N>
inline bool operator!=(const Dual<N>& a, const Dual<N>& b) {
  return a.value != b.value;
}

template <int N>
inline Dual<N> sqrt(const Dual<N>& a) {
  const double r = std::sqrt(a.value);
  return Dual<N>(r, a.grad * (0.5 / r));
}
template <int N>
inline Dual<N> abs(const Dual<N>& a) {
  return a.value < 0.0 ? -a : a;
}
template <int N>
inline Dual<N> sin(const Dual<N>& a) {
  return Dual<N>(std::sin(a.value), a.grad * std::cos(a.value));
}
template <int N>
inline Dual<N> cos(const Dual<N>& a) {
  return Dual<N>(std::cos(a.value), a.grad * -std::sin(a.value));
}
template <int N>
inline Dual<N> exp(const Dual<N>& a) {
  const double e = std::exp(a.value);
  return Dual<N>(e, a.grad * e);
}
template <int N>
inline Dual<N> log(const Dual<N>& a) {
  return Dual<N>(std::log(a.value), a.grad / a.value);
}
template <int N>
inline bool isfinite(const Dual<N>& a) {
  return std::isfinite(a.value) && a.grad.allFinite();
}

template <int N>
std::ostream& operator<<(std::ostream& os, const Dual<N>& a) {
  return os << a.value << " + [" << a.grad.transpose() << "]e";
}

/// Value part of a scalar that may or may not be a dual.
inline double value_of(double x) { return x; }
template <int N>
inline double value_of(const Dual<N>& x) {
  return x.value;
}

}  // namespace lqmhpe

namespace Eigen {

template <int N>
struct NumTraits<lqmhpe::Dual<N>> : NumTraits<double> {
  using Real = lqmhpe::Dual<N>;
  using NonInteger = lqmhpe::Dual<N>;
  using Nested = lqmhpe::Dual<N>;
  using Literal = lqmhpe::Dual<N>;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = N + 1,
    MulCost = 2 * N + 1,
  };
  static inline Real epsilon() { return Real(std::numeric_limits<double>::epsilon()); }
  static inline Real dummy_precision() { return Real(1e-12); }
  static inline Real highest() { return Real(std::numeric_limits<double>::max()); }
  static inline Real lowest() { return Real(std::numeric_limits<double>::lowest()); }
  static inline int digits10() { return NumTraits<double>::digits10(); }
};

template <int N, typename BinaryOp>
struct ScalarBinaryOpTraits<lqmhpe::Dual<N>, double, BinaryOp> {
  using ReturnType = lqmhpe::Dual<N>;
};
template <int N, typename BinaryOp>
struct ScalarBinaryOpTraits<double, lqmhpe::Dual<N>, BinaryOp> {
  using ReturnType = lqmhpe::Dual<N>;
};

}  // namespace Eigen
