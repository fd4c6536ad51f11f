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

// Single-rigid-body model of the trunk in the sagittal plane and its
// first-order discretization.

#pragma once

#include <span>
#include <string>

#include "ilcjump/model/types.hpp"

namespace ilcjump {

/// Planar cross product r x f (moment about the CoM, positive nose-up).
inline double cross2(const Vec2& r, const Vec2& f) {
  return r.x() * f.y() - r.y() * f.x();
}

struct SrbAccel {
  Vec2 linear = Vec2::Zero();
  double angular = 0.0;
};

inline SrbAccel srb_continuous_accel(const BodyState& state,
                                     const ForceSample& forces,
                                     const FootGeometry& feet,
                                     const RobotParams& params) {
  params.validate();
  if (!state.finite() || !forces.allFinite() || !feet.r_front.allFinite() ||
      !feet.r_rear.allFinite()) {
    throw ModelInputError("srb_continuous_accel: non-finite input");
  }
  const Vec2 f_front = forces.head<2>();
  const Vec2 f_rear = forces.tail<2>();
  SrbAccel acc;
  acc.linear = (f_front + f_rear) / params.trunk_mass -
               Vec2(0.0, params.gravity);
  acc.angular = (cross2(feet.r_front, f_front) + cross2(feet.r_rear, f_rear)) /
                params.trunk_inertia;
  return acc;
}

/// Continuous input matrix B_c(r_front, r_rear), 6x4.
inline Mat64 srb_input_matrix(const FootGeometry& feet,
                              const RobotParams& params) {
  Mat64 b = Mat64::Zero();
  const double inv_m = 1.0 / params.trunk_mass;
  const double inv_i = 1.0 / params.trunk_inertia;
  b(3, 0) = inv_m;
  b(4, 1) = inv_m;
  b(3, 2) = inv_m;
  b(4, 3) = inv_m;
  b(5, 0) = -feet.r_front.y() * inv_i;
  b(5, 1) = feet.r_front.x() * inv_i;
  b(5, 2) = -feet.r_rear.y() * inv_i;
  b(5, 3) = feet.r_rear.x() * inv_i;
  return b;
}

/// State transition A = I + dt * A_c; gravity enters through the constant
/// offset c = dt * (0, 0, 0, 0, -g, 0).
inline Mat6 srb_transition(double dt) {
  Mat6 a = Mat6::Identity();
  a(0, 3) = dt;
  a(1, 4) = dt;
  a(2, 5) = dt;
  return a;
}

inline DiscreteModel discretize(std::span<const FootGeometry> feet_per_sample,
                                const PhaseSchedule& schedule,
                                const RobotParams& params) {
  schedule.validate();
  params.validate();
  if (static_cast<int>(feet_per_sample.size()) != schedule.n_c()) {
    throw DimensionError("discretize: expected " +
                         std::to_string(schedule.n_c()) +
                         " foot geometries, got " +
                         std::to_string(feet_per_sample.size()));
  }
  DiscreteModel model;
  model.a_mat = srb_transition(schedule.dt);
  model.offset.setZero();
  model.offset(4) = -schedule.dt * params.gravity;
  model.b_mats.reserve(feet_per_sample.size());
  for (const auto& feet : feet_per_sample) {
    model.b_mats.push_back(schedule.dt * srb_input_matrix(feet, params));
  }
  return model;
}

/// Forward rollout of the discrete model over the whole horizon. Inputs exist
/// only for the first n_c samples; the flight samples are input-free.
inline std::vector<Vec6> rollout(const DiscreteModel& model, const Vec6& x0,
                                 std::span<const ForceSample> u, int n_total) {
  if (u.size() != model.b_mats.size()) {
    throw DimensionError("rollout: input length does not match model");
  }
  std::vector<Vec6> xs;
  xs.reserve(static_cast<size_t>(n_total) + 1);
  xs.push_back(x0);
  for (int t = 0; t < n_total; ++t) {
    const Vec6& x = xs.back();
    if (t < static_cast<int>(u.size())) {
      xs.push_back(model.step(x, t, u[static_cast<size_t>(t)]));
    } else {
      xs.push_back(model.a_mat * x + model.offset);
    }
  }
  return xs;
}

}  // namespace ilcjump
