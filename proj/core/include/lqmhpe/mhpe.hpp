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

// Moving-horizon parameter estimation.
//
// Both estimators fit a constant parameter vector to the last M transitions
//   x_{j+1} = f_d(x_j, u_j, p) + dt * w~_j
// with a prior term ||p - p_bar||_P^2 and a heavily weighted penalty
// rho_w ||w~_j - w_j||^2 on deviations from the measured disturbances.
//
// estimate_nonlinear works with the physical parameters theta and the RK4
// discretization (an NLP solved by SQP). estimate_lq works with the relaxed
// parameters vartheta and a forward-Euler step of the affine model, which
// makes the problem a convex QP.

#include <deque>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "lqmhpe/model.hpp"
#include "lqmhpe/qp_solver.hpp"
#include "lqmhpe/relaxation.hpp"
#include "lqmhpe/sqp.hpp"

namespace lqmhpe {

using ParamWeight = Eigen::Matrix<double, kParamDim, kParamDim>;

/// Sliding buffer of the most recent M transitions.
class HorizonWindow {
 public:
  HorizonWindow(int horizon, double dt);

  /// Records the transition from the current last state under input u and
  /// measured disturbance w, ending in `next`. The first call after
  /// construction or reset() must be start().
  void push_step(const InputVector& u, const Disturbance& w, const StateVector& next);

  /// Sets the initial state and clears all transitions.
  void start(const StateVector& x);

  void reset();

  int horizon() const { return horizon_; }
  double dt() const { return dt_; }
  int size() const { return static_cast<int>(inputs_.size()); }
  bool full() const { return size() == horizon_; }
  bool started() const { return !states_.empty(); }

  /// size() + 1 states, oldest first.
  const std::deque<StateVector>& states() const { return states_; }
  const std::deque<InputVector>& inputs() const { return inputs_; }
  const std::deque<Disturbance>& disturbances() const { return disturbances_; }

 private:
  int horizon_;
  double dt_;
  std::deque<StateVector> states_;
  std::deque<InputVector> inputs_;
  std::deque<Disturbance> disturbances_;
};

/// P_ii = 10^-floor(log10 |p0_i|). Throws std::invalid_argument on a zero or
/// non-finite entry.
ParamWeight tuning_weights(const ParamVector& nominal);

struct EstimatorSettings {
  double disturbance_weight = 1e6;  // rho_w
  Eigen::Vector3d gravity = Eigen::Vector3d(0.0, 0.0, -9.81);
  /// Keep the quaternion rows of the Euler defects in the LQ problem. They
  /// involve no parameters and only constrain slacks.
  bool include_quaternion_rows = true;
  qp::QpSettings qp = qp::settings_with_tolerance(1e-8, 10000);
  nlp::SqpSettings sqp = default_sqp();

  static nlp::SqpSettings default_sqp();
};

/// Prior, weight and box of one estimator.
struct EstimatorState {
  ParamVector prior = ParamVector::Zero();  // theta_bar or vartheta_bar
  ParamWeight weight = ParamWeight::Identity();
  ParamBox box;

  /// Throws std::invalid_argument unless the weight is symmetric PSD and the
  /// prior lies in the box.
  void validate() const;
};

/// theta-space estimator state: prior at theta0, tuning weights of theta0,
/// box [lo, hi] * theta0.
EstimatorState nonlinear_estimator_state(const NominalParams& theta0, double lower_factor = 0.5,
                                         double upper_factor = 1.5);

/// vartheta-space estimator state: prior at relax(theta0), tuning weights of
/// relax(theta0), box transform_bounds([lo, hi] * theta0).
EstimatorState lq_estimator_state(const NominalParams& theta0, double lower_factor = 0.5,
                                  double upper_factor = 1.5);

enum class EstimateStatus { kSolved, kNotReady, kFailed };

std::string to_string(EstimateStatus status);

struct Estimate {
  ParamVector params = ParamVector::Zero();
  double objective = 0.0;
  double solve_time = 0.0;  // seconds
  EstimateStatus status = EstimateStatus::kNotReady;
  int iterations = 0;
};

/// Objective of the LQ problem at vartheta with the slacks set to their
/// constraint-satisfying values.
double lq_objective(const HorizonWindow& window, const EstimatorState& state,
                    const ParamVector& vartheta, const EstimatorSettings& settings = {});

/// The LQ estimation QP over (vartheta, w~_0..w~_{M-1}). Exposed for testing.
qp::QpProblem build_lq_problem(const HorizonWindow& window, const EstimatorState& state,
                               const EstimatorSettings& settings = {});

/// The NMHPE NLP over (s, w~_0..w~_{M-1}) with theta = s .* scale, where
/// scale = |prior| entrywise. Exposed for testing.
nlp::NlpProblem build_nonlinear_problem(const HorizonWindow& window, const EstimatorState& state,
                                        const EstimatorSettings& settings = {});

/// Objective of the nonlinear problem at theta with the slacks set to their
/// constraint-satisfying values.
double nonlinear_objective(const HorizonWindow& window, const EstimatorState& state,
                           const ParamVector& theta, const EstimatorSettings& settings = {});

/// LQ-MHPE. On a failed solve the prior is returned with status kFailed; on a
/// window that is not full, the prior with kNotReady.
Estimate estimate_lq(const HorizonWindow& window, const EstimatorState& state,
                     const EstimatorSettings& settings = {});

/// NMHPE, same failure semantics as estimate_lq.
Estimate estimate_nonlinear(const HorizonWindow& window, const EstimatorState& state,
                            const EstimatorSettings& settings = {});

}  // namespace lqmhpe
