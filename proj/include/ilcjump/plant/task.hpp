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

#include <optional>
#include <string>

#include "ilcjump/model/types.hpp"
#include "ilcjump/plant/actuator.hpp"
#include "ilcjump/plant/ground.hpp"

namespace ilcjump {

/// Point mass bolted to the trunk. Offset is in the trunk frame.
struct Payload {
  double mass = 0.0;
  Vec2 offset = Vec2::Zero();
};

/// Step obstacle occupying x >= face_x, z <= height (world frame).
struct Box {
  double height = 0.0;
  double face_x = 0.0;
};

struct SimSettings {
  int substeps = 10;          // integrator steps per 1 ms control tick
  double settle_time = 1.5;   // seconds of stance before sample 0
  double bad_landing = deg2rad(70.0);
  double divergence_speed = 1e3;
  bool leg_mass_pairs = false;  // true: each planar link carries two links' mass
};

/// Everything the plant needs to execute one jump. The target is the CoM
/// displacement (dx, dz) and final pitch relative to the standing pose.
struct JumpTask {
  std::string id = "task";
  Vec2 target = Vec2(0.6, 0.0);
  double target_pitch = 0.0;
  std::optional<Box> box;
  GroundModel ground = GroundModel::hard();
  Payload payload;
  RobotParams robot;
  ActuatorParams actuator;
  LowLevelGains gains;
  PhaseSchedule schedule;
  SimSettings sim;
};

/// The plant gets the payload; the learner's RobotParams are left alone.
inline JumpTask attach_payload(JumpTask task, const Payload& payload) {
  if (!(payload.mass >= 0.0) || !payload.offset.allFinite()) {
    throw ModelInputError("payload mass must be >= 0");
  }
  task.payload = payload;
  return task;
}

struct RigidSummary {
  double mass = 0.0;
  Vec2 com = Vec2::Zero();  // trunk frame, relative to the trunk CoM
  double inertia = 0.0;     // about `com`
};

/// Trunk plus payload as one rigid body.
inline RigidSummary composite_trunk(const RobotParams& robot, const Payload& payload) {
  RigidSummary out;
  out.mass = robot.trunk_mass + payload.mass;
  out.com = payload.mass * payload.offset / out.mass;
  out.inertia = robot.trunk_inertia + payload.mass * payload.offset.squaredNorm() -
                out.mass * out.com.squaredNorm();
  return out;
}

}  // namespace ilcjump
