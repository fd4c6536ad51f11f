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


// DC-motor torque limits and the joint-level controller. Everything here is
// in single-motor units; the plant splits lumped leg-pair quantities in half.

#pragma once

#include <algorithm>
#include <cmath>

#include "ilcjump/model/kinematics.hpp"

namespace ilcjump {

struct ActuatorOutput {
  double tau = 0.0;
  double volts = 0.0;
};

/// Saturation first, then the voltage-feasible interval
/// [(-V - sigma qdot)/rho, (V - sigma qdot)/rho].
inline ActuatorOutput actuator_clamp(double tau_cmd, double qdot,
                                     const ActuatorParams& act) {
  double tau = std::clamp(tau_cmd, -act.tau_max, act.tau_max);
  const double lo = (-act.v_bat - act.sigma * qdot) / act.rho;
  const double hi = (act.v_bat - act.sigma * qdot) / act.rho;
  if (lo <= hi) tau = std::clamp(tau, lo, hi);
  // Past qdot_max the interval no longer contains zero; pick the end that
  // brakes hardest.
  if (lo > act.tau_max) tau = act.tau_max;
  if (hi < -act.tau_max) tau = -act.tau_max;
  return {tau, act.rho * tau + act.sigma * qdot};
}

struct LowLevelGains {
  double kp_joint = 100.0;
  double kd_joint = 2.0;

  void validate() const {
    if (kp_joint < 0.0 || kd_joint < 0.0) {
      throw ModelInputError("joint gains must be non-negative");
    }
  }
};

struct LegCommand {
  Vec2 tau = Vec2::Zero();
  Vec2 volts = Vec2::Zero();
};

/// PD on the joint reference plus the torque that realizes `u_ff` at the foot,
/// then per-joint actuator limits.
inline LegCommand low_level_step(const LegJoints& ref, const LegJoints& meas,
                                 const Vec2& u_ff, double theta,
                                 const LowLevelGains& gains,
                                 const ActuatorParams& act,
                                 const LegGeometry& leg,
                                 const Vec2& tau_extra = Vec2::Zero()) {
  const Vec2 cmd = gains.kp_joint * (ref.q - meas.q) +
                   gains.kd_joint * (ref.qdot - meas.qdot) +
                   force_to_torque(u_ff, meas.q, theta, leg) + tau_extra;
  LegCommand out;
  for (int j = 0; j < 2; ++j) {
    const auto a = actuator_clamp(cmd(j), meas.qdot(j), act);
    out.tau(j) = a.tau;
    out.volts(j) = a.volts;
  }
  return out;
}

}  // namespace ilcjump
