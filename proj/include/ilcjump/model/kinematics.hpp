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

// Two-link planar leg kinematics.
//
// Conventions: the thigh angle q(0) is measured from the body +x axis, the
// calf angle q(1) is relative to the thigh, and body pitch is positive
// nose-up. The inverse solution always takes the calf <= 0 branch.

#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ilcjump/model/types.hpp"

namespace ilcjump {

/// Body-to-world rotation in the sagittal plane.
inline Mat2 rotation(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

struct LegGeometry {
  double thigh = 0.2;
  double calf = 0.2;

  static LegGeometry from(const RobotParams& p) {
    return {p.thigh_length, p.calf_length};
  }
};

/// Foot position relative to the hip, body frame.
inline Vec2 leg_fk_body(const Vec2& q, const LegGeometry& leg) {
  const double a1 = q(0);
  const double a12 = q(0) + q(1);
  return {leg.thigh * std::cos(a1) + leg.calf * std::cos(a12),
          leg.thigh * std::sin(a1) + leg.calf * std::sin(a12)};
}

/// Foot position relative to the CoM in the world frame.
inline Vec2 leg_fk(const Vec2& q, const Vec2& hip_offset, double theta,
                   const LegGeometry& leg) {
  return rotation(theta) * (hip_offset + leg_fk_body(q, leg));
}

/// Joint rates -> body-frame foot velocity.
inline Mat2 leg_jacobian(const Vec2& q, const LegGeometry& leg) {
  const double s1 = std::sin(q(0));
  const double c1 = std::cos(q(0));
  const double s12 = std::sin(q(0) + q(1));
  const double c12 = std::cos(q(0) + q(1));
  Mat2 j;
  j << -leg.thigh * s1 - leg.calf * s12, -leg.calf * s12,
      leg.thigh * c1 + leg.calf * c12, leg.calf * c12;
  return j;
}

inline Vec2 leg_ik(const Vec2& foot_body, const LegGeometry& leg) {
  const double d = foot_body.norm();
  const double d_max = leg.thigh + leg.calf;
  const double d_min = std::abs(leg.thigh - leg.calf);
  constexpr double kSlack = 1e-12;
  if (!foot_body.allFinite()) {
    throw KinematicsError("leg_ik: non-finite foot target");
  }
  if (d > d_max + kSlack) {
    std::ostringstream os;
    os << "leg_ik: target distance " << d << " exceeds max reach " << d_max;
    throw KinematicsError(os.str());
  }
  if (d < d_min - kSlack) {
    std::ostringstream os;
    os << "leg_ik: target distance " << d << " below min reach " << d_min;
    throw KinematicsError(os.str());
  }
  const double cos_knee =
      std::clamp((d * d - leg.thigh * leg.thigh - leg.calf * leg.calf) /
                     (2.0 * leg.thigh * leg.calf),
                 -1.0, 1.0);
  const double q2 = -std::acos(cos_knee);
  const double q1 = std::atan2(foot_body.y(), foot_body.x()) -
                    std::atan2(leg.calf * std::sin(q2),
                               leg.thigh + leg.calf * std::cos(q2));
  return {q1, q2};
}

/// Joint torques realizing the ground reaction force `u` (world frame, acting
/// on the robot) at the foot: tau = -J(q)^T R(theta)^T u. The leg pushes the
/// ground with -u.
inline Vec2 force_to_torque(const Vec2& u, const Vec2& q, double theta,
                            const LegGeometry& leg) {
  return -(leg_jacobian(q, leg).transpose() * rotation(theta).transpose() * u);
}

/// The 2x2 map u -> tau used to build torque constraints.
inline Mat2 force_to_torque_matrix(const Vec2& q, double theta,
                                   const LegGeometry& leg) {
  return -(leg_jacobian(q, leg).transpose() * rotation(theta).transpose());
}

}  // namespace ilcjump
