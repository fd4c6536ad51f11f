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

#include <vector>

#include "ilcjump/model/types.hpp"

namespace ilcjump {

/// Stance footholds (world x at z = 0) and the stand height they imply.
struct FootholdPlan {
  double front_x = 0.0;
  double rear_x = 0.0;
  double stand_height = 0.0;
  Vec2 tuck = Vec2(0.0, -0.24);  // flight foot target, hip frame
};

struct ReferenceBundle {
  std::vector<BodyState> body_ref;  // N + 1
  std::vector<LegState> joint_ref;  // N + 1
  ControlSequence u_init;           // N_c
  FootholdPlan footholds;
  PhaseSchedule schedule;
};

}  // namespace ilcjump
