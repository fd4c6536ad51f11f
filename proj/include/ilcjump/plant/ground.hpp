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


// Penalty ground contact: spring-damper normal force and a stiction spring
// in the tangential direction, clamped to the Coulomb cone.

#pragma once

#include <algorithm>
#include <cmath>

#include "ilcjump/model/types.hpp"

namespace ilcjump {

struct GroundModel {
  double k_p = 2e4;
  double k_d = 3e3;
  double mu = 0.6;
  double tangential_stiffness = 2e4;
  double tangential_damping = 3e3;

  static GroundModel soft() { return {2e3, 5e2, 0.6, 2e3, 5e2}; }
  static GroundModel hard() { return {2e4, 3e3, 0.6, 2e4, 3e3}; }

  void validate() const {
    if (!(k_p > 0.0 && k_d > 0.0 && mu > 0.0)) {
      throw ModelInputError("ground k_p, k_d, mu must be positive");
    }
    if (tangential_stiffness < 0.0 || tangential_damping < 0.0) {
      throw ModelInputError("ground tangential gains must be non-negative");
    }
  }
};

struct GroundForce {
  Vec2 force = Vec2::Zero();  // (f_x, f_z) on the foot
  double anchor = 0.0;        // stiction anchor x
  bool in_contact = false;
  bool slipping = false;
};

inline GroundForce ground_reaction(const Vec2& foot_pos, const Vec2& foot_vel,
                                   double anchor, const GroundModel& ground,
                                   double ground_height = 0.0) {
  GroundForce out;
  const double depth = ground_height - foot_pos.y();
  if (depth <= 0.0) {
    out.anchor = foot_pos.x();
    return out;
  }
  out.in_contact = true;
  const double fz =
      std::max(0.0, ground.k_p * depth - ground.k_d * foot_vel.y());
  const double demand = -ground.tangential_stiffness * (foot_pos.x() - anchor) -
                        ground.tangential_damping * foot_vel.x();
  const double limit = ground.mu * fz;
  double fx = demand;
  out.anchor = anchor;
  if (std::abs(demand) > limit) {
    fx = std::copysign(limit, demand);
    out.slipping = true;
    // Re-seat the anchor so the spring alone carries the clamped force.
    out.anchor = ground.tangential_stiffness > 0.0
                     ? foot_pos.x() + fx / ground.tangential_stiffness
                     : foot_pos.x();
  }
  out.force = {fx, fz};
  return out;
}

}  // namespace ilcjump
