// Copyright 2026 The ilcjump Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <vector>

#include "ilcjump/errors.hpp"

namespace ilcjump {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat64 = Eigen::Matrix<double, 6, 4>;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Planar trunk state. Vector layout is [p_x, p_z, theta, v_x, v_z, omega].
struct BodyState {
  double p_x = 0.0;
  double p_z = 0.0;
  double theta = 0.0;  // pitch, positive nose-up
  double v_x = 0.0;
  double v_z = 0.0;
  double omega = 0.0;

  Vec6 vector() const {
    Vec6 x;
    x << p_x, p_z, theta, v_x, v_z, omega;
    return x;
  }
  static BodyState from_vector(const Vec6& x) {
    return {x(0), x(1), x(2), x(3), x(4), x(5)};
  }
  Vec2 position() const { return {p_x, p_z}; }
  Vec2 velocity() const { return {v_x, v_z}; }
  bool finite() const { return vector().allFinite(); }
};

/// Lumped planar robot. Each planar leg stands for a left/right pair.
struct RobotParams {
  double trunk_mass = 9.60;
  double trunk_height = 0.114;
  double trunk_inertia = 1.0 / 12.0 * 9.60 * (0.366 * 0.366 + 0.114 * 0.114);
  double body_length = 0.366;
  double thigh_length = 0.2;
  double calf_length = 0.2;
  double thigh_mass = 1.61;
  double calf_mass = 0.66;
  double gravity = 9.81;

  double hip_x() const { return 0.5 * body_length; }
  double reach() const { return thigh_length + calf_length; }

  void validate() const {
    for (double v : {trunk_mass, trunk_inertia, body_length, thigh_length,
                     calf_length, thigh_mass, calf_mass, gravity}) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw ModelInputError("robot parameters must be finite and positive");
      }
    }
  }
};

/// DC-motor actuator limits. rho = r / (K_tau g_r), sigma = K_v g_r.
struct ActuatorParams {
  double tau_max = 33.5;
  double qdot_max = 21.0;
  double v_bat = 21.5;
  double rho = 21.5 / 33.5;
  double sigma = 21.5 / 21.0;

  void validate() const {
    for (double v : {tau_max, qdot_max, v_bat, rho, sigma}) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw ModelInputError("actuator parameters must be finite and positive");
      }
    }
    if (v_bat / sigma < 0.99 * qdot_max) {
      throw ModelInputError("v_bat / sigma must reach qdot_max (within 1%)");
    }
  }
};

enum class Phase { kAllLeg, kRearLeg, kFlight };

/// Sample counts for the contact schedule dc -> sc -> fl.
struct PhaseSchedule {
  int n_dc = 15;
  int n_sc = 10;
  int n_fl = 40;
  double dt = 0.01;

  int n_c() const { return n_dc + n_sc; }
  int n() const { return n_c() + n_fl; }
  double flight_time() const { return n_fl * dt; }

  /// Phase governing the input applied over [t, t+1).
  Phase phase(int t) const {
    if (t < n_dc) return Phase::kAllLeg;
    if (t < n_c()) return Phase::kRearLeg;
    return Phase::kFlight;
  }
  bool front_in_contact(int t) const { return t < n_dc; }
  bool rear_in_contact(int t) const { return t < n_c(); }

  void validate() const {
    if (n_dc < 1 || n_sc < 1 || n_fl < 1) {
      throw ModelInputError("phase sample counts must be >= 1");
    }
    if (!(dt > 0.0)) throw ModelInputError("dt must be positive");
  }
};

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::kAllLeg: return "dc";
    case Phase::kRearLeg: return "sc";
    case Phase::kFlight: return "fl";
  }
  return "?";
}

/// Foot positions relative to the CoM, world frame.
struct FootGeometry {
  Vec2 r_front = Vec2::Zero();
  Vec2 r_rear = Vec2::Zero();
};

/// Per-leg force pair (f_x, f_z), stacked [front; rear].
using ForceSample = Vec4;
using ControlSequence = std::vector<ForceSample>;

/// Joint angles and rates of one planar leg: (thigh, calf).
struct LegJoints {
  Vec2 q = Vec2::Zero();
  Vec2 qdot = Vec2::Zero();
};

/// Both legs.
struct LegState {
  LegJoints front;
  LegJoints rear;

  Vec4 q() const { return {front.q(0), front.q(1), rear.q(0), rear.q(1)}; }
  Vec4 qdot() const {
    return {front.qdot(0), front.qdot(1), rear.qdot(0), rear.qdot(1)};
  }
};

/// x_{t+1} = A x_t + B_t u_t + c.
struct DiscreteModel {
  Mat6 a_mat = Mat6::Identity();
  Vec6 offset = Vec6::Zero();
  std::vector<Mat64> b_mats;

  Vec6 step(const Vec6& x, int t, const Vec4& u) const {
    return a_mat * x + b_mats.at(static_cast<size_t>(t)) * u + offset;
  }
};

}  // namespace ilcjump
