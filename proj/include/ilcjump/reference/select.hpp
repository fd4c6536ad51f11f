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


// Reference choice by rollout: every buildable grid design is flown once on
// the nominal articulated robot and the one landing closest to the target
// wins. The learner never sees the ground model or payload used by a task,
// so the rollout uses hard ground and no payload.

#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include "ilcjump/plant/trial.hpp"
#include "ilcjump/reference/generator.hpp"

namespace ilcjump {

struct SelectionResult {
  ReferenceBundle bundle;
  ReferenceDesign design;
  Vec6 first_error = Vec6::Zero();  // nominal rollout error at sample N
  int rollouts = 0;
};

/// Final-sample error in units of a nominal tolerance (2 cm, 2 deg).
inline double rollout_score(const Vec6& e) {
  return std::hypot(e(0), e(1)) / 0.02 + std::abs(e(2)) / deg2rad(2.0);
}

inline SelectionResult select_reference(const JumpTask& task, ReferenceSettings rs = {},
                                        int max_rollouts = 200) {
  rs.actuator = task.actuator;
  JumpTask nominal = task;
  nominal.payload = Payload{};
  nominal.ground = GroundModel::hard();
  std::optional<SelectionResult> best, fallback;
  double best_score = std::numeric_limits<double>::infinity();
  int rollouts = 0;
  for (const auto& d : reference_candidates(task.target, task.target_pitch, task.robot,
                                            task.schedule, rs)) {
    if (rollouts >= max_rollouts) break;
    ReferenceBundle b;
    try {
      b = build_reference(d, task.target, task.target_pitch, task.robot, task.schedule, rs);
    } catch (const InfeasibleForceError&) {
      continue;
    } catch (const KinematicsError&) {
      continue;
    }
    ++rollouts;
    const TrialRecord rec = TrialRunner(b, nominal).run(b.u_init);
    const Vec6 e = rec.final_error();
    if (!fallback) fallback = SelectionResult{b, d, e, 0};
    if (rec.flags.diverged || rec.flags.collision) continue;
    const double score = rollout_score(e);
    if (score < best_score) {
      best_score = score;
      best = SelectionResult{std::move(b), d, e, 0};
    }
  }
  if (!best) best = std::move(fallback);
  if (!best) throw ModelInputError("no feasible reference design for this target");
  best->rollouts = rollouts;
  return *best;
}

}  // namespace ilcjump
