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


// Campaigns shared by the command-line tool and the acceptance runner.

#pragma once

#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "ilcjump/experiment/run_io.hpp"
#include "ilcjump/experiment/task_file.hpp"
#include "ilcjump/ilc/learner.hpp"
#include "ilcjump/reference/select.hpp"

namespace ilcjump::experiment {

/// Reference for a task. "grid" takes the first buildable design, "rollout"
/// flies candidates on the nominal robot and keeps the closest landing.
inline ReferenceBundle reference_for(const TaskSpec& s) {
  ReferenceSettings rs;
  rs.actuator = s.task.actuator;
  if (s.reference == "grid") {
    return make_reference_bundle(s.task.target, s.task.target_pitch, s.task.robot,
                                 s.task.schedule, rs);
  }
  return select_reference(s.task, rs, s.reference_rollouts).bundle;
}

/// Caches references by everything that shapes them. Safe across threads.
class ReferenceCache {
 public:
  ReferenceBundle get(const TaskSpec& s) {
    const std::string key = key_of(s);
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    ReferenceBundle b = reference_for(s);
    std::lock_guard<std::mutex> lock(mu_);
    return cache_.emplace(key, std::move(b)).first->second;
  }

 private:
  static std::string key_of(const TaskSpec& s) {
    // The rollout runs on the nominal robot, so ground and payload do not matter.
    TaskSpec k = s;
    k.task.id.clear();
    k.task.ground = GroundModel::hard();
    k.task.payload = Payload{};
    k.opt = ilc::LearnOptions{};
    k.transfer_source.reset();
    return to_yaml(k);
  }

  std::mutex mu_;
  std::map<std::string, ReferenceBundle> cache_;
};

struct RunResult {
  ilc::History history;
  ReferenceBundle refs;
};

inline RunResult learn(const TaskSpec& s, ReferenceCache* cache = nullptr,
                       const ilc::TrialCallback& cb = {}) {
  RunResult r;
  r.refs = cache ? cache->get(s) : reference_for(s);
  r.history = ilc::run_learning(s.task, r.refs, s.opt, cb);
  return r;
}

/// Goal-only learning seeded with a finished run. The caller decides whether
/// an unconverged source is acceptable.
inline RunResult transfer(const TaskSpec& s, const LearnedRun& from,
                          const ilc::TrialCallback& cb = {}) {
  RunResult r;
  r.refs = retarget(from.refs, s.task.target, s.task.target_pitch, s.task.robot.gravity);
  r.history = ilc::transfer_learning(from.u, from.refs, s.task, s.opt, cb);
  return r;
}

/// Divergence is the only outcome that makes a run fail outright.
inline bool diverged(const ilc::History& h) {
  for (const auto& t : h.trials) {
    if (t.record.flags.diverged) return true;
  }
  return false;
}

inline int bad_landing_count(const ilc::History& h) {
  int n = 0;
  for (const auto& t : h.trials) n += t.record.flags.bad_landing;
  return n;
}

/// Text table of landing errors at the given 1-based trials, one row per
/// learner. Trials that were not run (converged earlier) show the last one.
inline std::string comparison_table(const std::vector<ilc::History>& runs,
                                    const std::vector<int>& at = {1, 5, 10, 15, 20}) {
  std::string out = "learner";
  for (int k : at) out += "\ttrial" + std::to_string(k) + " (ex cm, ez cm, eth deg)";
  out += "\tbad_landings\tconverged\ttrials\n";
  for (const auto& h : runs) {
    out += ilc::learner_name(h.learner);
    for (int k : at) {
      const size_t i = std::min(static_cast<size_t>(k), h.trials.size()) - 1;
      const Vec6 e = h.trials[i].record.final_error();
      char buf[96];
      std::snprintf(buf, sizeof buf, "\t%.1f, %.1f, %.1f", 100 * e(0), 100 * e(1),
                    rad2deg(e(2)));
      out += buf;
    }
    out += "\t" + std::to_string(bad_landing_count(h)) + "\t" +
           (h.converged ? "yes" : "no") + "\t" + std::to_string(h.trial_count()) + "\n";
  }
  return out;
}

}  // namespace ilcjump::experiment
