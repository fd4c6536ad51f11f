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


// Task files: YAML describing one jump and how to learn it.
//
//   id: forward-60
//   target: {x: 0.6, z: 0.0, theta_deg: 0}
//   box: {height: 0.1, face_x: 0.4}        # optional
//   ground: hard                           # soft | hard | {k_p, k_d, mu}
//   payload: {mass: 2.0, x: 0.0, z: 0.0}   # optional, unknown to the learner
//   learner: proposed                      # proposed | pd-ilc | ilc-mpc
//   stages: {stage1: 5, stage2: 5}
//   weights: {q_e: [1, 3, 3, .01, .01, .01], q_u: 1e-5}
//   tolerances: {x: 0.02, z: 0.03, theta_deg: 2}
//   max_trials: 25
//   transfer_source: runs/forward-40       # optional
//
// Every other numeric knob has a default; `expand` writes the full tree so
// sweeps can address any of them by dotted path.

#pragma once

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdlib>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ilcjump/errors.hpp"
#include "ilcjump/ilc/learner.hpp"

namespace ilcjump::experiment {

struct TaskSpec {
  JumpTask task;
  ilc::LearnOptions opt;
  std::string reference = "rollout";  // rollout | grid
  int reference_rollouts = 200;
  std::optional<std::string> transfer_source;
};

namespace detail {

inline std::string where(const YAML::Node& n) {
  const auto m = n.Mark();
  if (m.line < 0) return "";
  return " (line " + std::to_string(m.line + 1) + ")";
}

inline double number(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) throw TaskFileError(field, "expected a number" + where(n));
  double v = 0.0;
  try {
    v = n.as<double>();
  } catch (const YAML::Exception&) {
    throw TaskFileError(field, "expected a number, got '" + n.Scalar() + "'" + where(n));
  }
  if (!std::isfinite(v)) throw TaskFileError(field, "must be finite" + where(n));
  return v;
}

inline int integer(const YAML::Node& n, const std::string& field) {
  const double v = number(n, field);
  if (v != std::floor(v)) throw TaskFileError(field, "expected an integer" + where(n));
  return static_cast<int>(v);
}

inline std::string text(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) throw TaskFileError(field, "expected a string" + where(n));
  return n.Scalar();
}

inline void only_keys(const YAML::Node& n, const std::string& field,
                      const std::set<std::string>& allowed) {
  if (!n.IsMap()) throw TaskFileError(field.empty() ? "task" : field, "expected a mapping" + where(n));
  for (const auto& kv : n) {
    const std::string k = kv.first.as<std::string>();
    if (!allowed.count(k)) {
      throw TaskFileError(field.empty() ? k : field + "." + k, "unknown key" + where(kv.first));
    }
  }
}

template <typename F>
void optional_field(const YAML::Node& parent, const char* key, F&& f) {
  const YAML::Node n = parent[key];
  if (n && !n.IsNull()) f(n);
}

inline std::string join(const std::string& a, const char* b) {
  return a.empty() ? std::string(b) : a + "." + b;
}

inline Vec2 pair(const YAML::Node& n, const std::string& field, const char* a, const char* b) {
  only_keys(n, field, {a, b});
  Vec2 v = Vec2::Zero();
  optional_field(n, a, [&](const YAML::Node& x) { v(0) = number(x, join(field, a)); });
  optional_field(n, b, [&](const YAML::Node& x) { v(1) = number(x, join(field, b)); });
  return v;
}

template <int N>
Eigen::Matrix<double, N, 1> vector_or_scalar(const YAML::Node& n, const std::string& field) {
  Eigen::Matrix<double, N, 1> v;
  if (n.IsScalar()) {
    v.setConstant(number(n, field));
    return v;
  }
  if (!n.IsSequence() || static_cast<int>(n.size()) != N) {
    throw TaskFileError(field, "expected a number or a list of " + std::to_string(N) + where(n));
  }
  for (int i = 0; i < N; ++i) v(i) = number(n[i], field + "[" + std::to_string(i) + "]");
  return v;
}

}  // namespace detail

inline TaskSpec parse_task(const YAML::Node& root) {
  using namespace detail;
  only_keys(root, "", {"id", "target", "box", "ground", "payload", "learner", "stages",
                       "weights", "bounds", "tolerances", "max_trials", "flight_error_model",
                       "transfer_source", "reference", "reference_rollouts", "gains", "sim",
                       "schedule"});
  TaskSpec s;
  JumpTask& t = s.task;
  ilc::LearnOptions& o = s.opt;
  optional_field(root, "id", [&](const YAML::Node& n) { t.id = text(n, "id"); });
  if (!root["target"]) throw TaskFileError("target", "required");
  {
    const YAML::Node n = root["target"];
    only_keys(n, "target", {"x", "z", "theta_deg"});
    if (!n["x"]) throw TaskFileError("target.x", "required" + where(n));
    t.target.x() = number(n["x"], "target.x");
    optional_field(n, "z", [&](const YAML::Node& x) { t.target.y() = number(x, "target.z"); });
    optional_field(n, "theta_deg", [&](const YAML::Node& x) {
      t.target_pitch = deg2rad(number(x, "target.theta_deg"));
    });
  }
  optional_field(root, "box", [&](const YAML::Node& n) {
    only_keys(n, "box", {"height", "face_x"});
    Box b;
    b.height = n["height"] ? number(n["height"], "box.height") : t.target.y();
    // Default face: far enough out that the tucked rear foot lands on top.
    b.face_x = n["face_x"] ? number(n["face_x"], "box.face_x") : t.target.x() - 0.2;
    if (!(b.height > 0.0)) throw TaskFileError("box.height", "must be positive" + where(n));
    t.box = b;
  });
  optional_field(root, "ground", [&](const YAML::Node& n) {
    if (n.IsScalar()) {
      const std::string p = n.Scalar();
      if (p == "hard") {
        t.ground = GroundModel::hard();
      } else if (p == "soft") {
        t.ground = GroundModel::soft();
      } else {
        throw TaskFileError("ground", "unknown preset '" + p + "'" + where(n));
      }
      return;
    }
    only_keys(n, "ground", {"k_p", "k_d", "mu", "tangential_stiffness", "tangential_damping"});
    GroundModel g = GroundModel::hard();
    optional_field(n, "k_p", [&](const YAML::Node& x) { g.k_p = number(x, "ground.k_p"); });
    optional_field(n, "k_d", [&](const YAML::Node& x) { g.k_d = number(x, "ground.k_d"); });
    optional_field(n, "mu", [&](const YAML::Node& x) { g.mu = number(x, "ground.mu"); });
    // Tangential spring follows the normal one unless given.
    g.tangential_stiffness = g.k_p;
    g.tangential_damping = g.k_d;
    optional_field(n, "tangential_stiffness", [&](const YAML::Node& x) {
      g.tangential_stiffness = number(x, "ground.tangential_stiffness");
    });
    optional_field(n, "tangential_damping", [&](const YAML::Node& x) {
      g.tangential_damping = number(x, "ground.tangential_damping");
    });
    try {
      g.validate();
    } catch (const ModelInputError& e) {
      throw TaskFileError("ground", e.what() + where(n));
    }
    t.ground = g;
  });
  optional_field(root, "payload", [&](const YAML::Node& n) {
    only_keys(n, "payload", {"mass", "x", "z"});
    Payload p;
    optional_field(n, "mass", [&](const YAML::Node& x) { p.mass = number(x, "payload.mass"); });
    optional_field(n, "x", [&](const YAML::Node& x) { p.offset.x() = number(x, "payload.x"); });
    optional_field(n, "z", [&](const YAML::Node& x) { p.offset.y() = number(x, "payload.z"); });
    try {
      t = attach_payload(t, p);
    } catch (const ModelInputError& e) {
      throw TaskFileError("payload.mass", e.what() + where(n));
    }
  });
  optional_field(root, "gains", [&](const YAML::Node& n) {
    const Vec2 g = pair(n, "gains", "kp_joint", "kd_joint");
    t.gains = {g(0), g(1)};
    if (!n["kp_joint"]) t.gains.kp_joint = LowLevelGains{}.kp_joint;
    if (!n["kd_joint"]) t.gains.kd_joint = LowLevelGains{}.kd_joint;
    if (t.gains.kp_joint < 0.0 || t.gains.kd_joint < 0.0) {
      throw TaskFileError("gains", "must be non-negative" + where(n));
    }
  });
  optional_field(root, "schedule", [&](const YAML::Node& n) {
    only_keys(n, "schedule", {"n_dc", "n_sc", "n_fl", "dt"});
    PhaseSchedule& sch = t.schedule;
    optional_field(n, "n_dc", [&](const YAML::Node& x) { sch.n_dc = integer(x, "schedule.n_dc"); });
    optional_field(n, "n_sc", [&](const YAML::Node& x) { sch.n_sc = integer(x, "schedule.n_sc"); });
    optional_field(n, "n_fl", [&](const YAML::Node& x) { sch.n_fl = integer(x, "schedule.n_fl"); });
    optional_field(n, "dt", [&](const YAML::Node& x) { sch.dt = number(x, "schedule.dt"); });
    try {
      sch.validate();
    } catch (const ModelInputError& e) {
      throw TaskFileError("schedule", e.what() + where(n));
    }
  });
  optional_field(root, "sim", [&](const YAML::Node& n) {
    only_keys(n, "sim", {"substeps", "settle_time", "bad_landing_deg"});
    optional_field(n, "substeps", [&](const YAML::Node& x) {
      t.sim.substeps = integer(x, "sim.substeps");
      if (t.sim.substeps < 1) throw TaskFileError("sim.substeps", "must be >= 1" + where(x));
    });
    optional_field(n, "settle_time", [&](const YAML::Node& x) {
      t.sim.settle_time = number(x, "sim.settle_time");
    });
    optional_field(n, "bad_landing_deg", [&](const YAML::Node& x) {
      t.sim.bad_landing = deg2rad(number(x, "sim.bad_landing_deg"));
    });
  });
  optional_field(root, "learner", [&](const YAML::Node& n) {
    try {
      o.learner = ilc::parse_learner(text(n, "learner"));
    } catch (const ModelInputError& e) {
      throw TaskFileError("learner", e.what() + where(n));
    }
  });
  optional_field(root, "stages", [&](const YAML::Node& n) {
    only_keys(n, "stages", {"stage1", "stage2"});
    optional_field(n, "stage1", [&](const YAML::Node& x) {
      o.stages.stage1_trials = integer(x, "stages.stage1");
    });
    optional_field(n, "stage2", [&](const YAML::Node& x) {
      o.stages.stage2_trials = integer(x, "stages.stage2");
    });
    if (o.stages.stage1_trials < 0 || o.stages.stage2_trials < 0) {
      throw TaskFileError("stages", "trial counts must be non-negative" + where(n));
    }
  });
  optional_field(root, "weights", [&](const YAML::Node& n) {
    only_keys(n, "weights", {"q_e", "q_u"});
    optional_field(n, "q_e", [&](const YAML::Node& x) {
      o.weights.q_e = vector_or_scalar<6>(x, "weights.q_e");
    });
    optional_field(n, "q_u", [&](const YAML::Node& x) {
      o.weights.q_u = vector_or_scalar<4>(x, "weights.q_u");
    });
    try {
      o.weights.validate();
    } catch (const ModelInputError& e) {
      throw TaskFileError("weights", e.what() + where(n));
    }
  });
  optional_field(root, "bounds", [&](const YAML::Node& n) {
    only_keys(n, "bounds", {"f_min", "f_max", "mu"});
    optional_field(n, "f_min", [&](const YAML::Node& x) { o.bounds.f_min = number(x, "bounds.f_min"); });
    optional_field(n, "f_max", [&](const YAML::Node& x) { o.bounds.f_max = number(x, "bounds.f_max"); });
    optional_field(n, "mu", [&](const YAML::Node& x) { o.bounds.mu = number(x, "bounds.mu"); });
    try {
      o.bounds.validate();
    } catch (const ModelInputError& e) {
      throw TaskFileError("bounds", e.what() + where(n));
    }
  });
  optional_field(root, "tolerances", [&](const YAML::Node& n) {
    only_keys(n, "tolerances", {"x", "z", "theta_deg"});
    optional_field(n, "x", [&](const YAML::Node& v) { o.tol.x = number(v, "tolerances.x"); });
    optional_field(n, "z", [&](const YAML::Node& v) { o.tol.z = number(v, "tolerances.z"); });
    optional_field(n, "theta_deg", [&](const YAML::Node& v) {
      o.tol.theta = deg2rad(number(v, "tolerances.theta_deg"));
    });
  });
  optional_field(root, "max_trials", [&](const YAML::Node& n) {
    o.max_trials = integer(n, "max_trials");
    if (o.max_trials < 1) throw TaskFileError("max_trials", "must be >= 1" + where(n));
  });
  optional_field(root, "flight_error_model", [&](const YAML::Node& n) {
    try {
      o.flight = ilc::parse_flight_model(text(n, "flight_error_model"));
    } catch (const ModelInputError& e) {
      throw TaskFileError("flight_error_model", e.what() + where(n));
    }
  });
  optional_field(root, "transfer_source", [&](const YAML::Node& n) {
    s.transfer_source = text(n, "transfer_source");
  });
  optional_field(root, "reference", [&](const YAML::Node& n) {
    s.reference = text(n, "reference");
    if (s.reference != "rollout" && s.reference != "grid") {
      throw TaskFileError("reference", "expected 'rollout' or 'grid'" + where(n));
    }
  });
  optional_field(root, "reference_rollouts", [&](const YAML::Node& n) {
    s.reference_rollouts = integer(n, "reference_rollouts");
    if (s.reference_rollouts < 1) throw TaskFileError("reference_rollouts", "must be >= 1" + where(n));
  });
  return s;
}

inline TaskSpec parse_task_text(const std::string& yaml) {
  try {
    return parse_task(YAML::Load(yaml));
  } catch (const YAML::ParserException& e) {
    throw TaskFileError("yaml", e.what());
  }
}

inline TaskSpec load_task_file(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw TaskFileError("file", "cannot read '" + path + "'");
  } catch (const YAML::ParserException& e) {
    throw TaskFileError("yaml", e.what());
  }
  return parse_task(root);
}

/// The full explicit tree for `s`; parse_task(expand(s)) reproduces `s`.
inline YAML::Node expand(const TaskSpec& s) {
  const JumpTask& t = s.task;
  const ilc::LearnOptions& o = s.opt;
  YAML::Node n;
  n["id"] = t.id;
  n["target"]["x"] = t.target.x();
  n["target"]["z"] = t.target.y();
  n["target"]["theta_deg"] = rad2deg(t.target_pitch);
  if (t.box) {
    n["box"]["height"] = t.box->height;
    n["box"]["face_x"] = t.box->face_x;
  }
  n["ground"]["k_p"] = t.ground.k_p;
  n["ground"]["k_d"] = t.ground.k_d;
  n["ground"]["mu"] = t.ground.mu;
  if (t.ground.tangential_stiffness != t.ground.k_p) {
    n["ground"]["tangential_stiffness"] = t.ground.tangential_stiffness;
  }
  if (t.ground.tangential_damping != t.ground.k_d) {
    n["ground"]["tangential_damping"] = t.ground.tangential_damping;
  }
  n["payload"]["mass"] = t.payload.mass;
  n["payload"]["x"] = t.payload.offset.x();
  n["payload"]["z"] = t.payload.offset.y();
  n["gains"]["kp_joint"] = t.gains.kp_joint;
  n["gains"]["kd_joint"] = t.gains.kd_joint;
  n["schedule"]["n_dc"] = t.schedule.n_dc;
  n["schedule"]["n_sc"] = t.schedule.n_sc;
  n["schedule"]["n_fl"] = t.schedule.n_fl;
  n["schedule"]["dt"] = t.schedule.dt;
  n["sim"]["substeps"] = t.sim.substeps;
  n["sim"]["settle_time"] = t.sim.settle_time;
  n["sim"]["bad_landing_deg"] = rad2deg(t.sim.bad_landing);
  n["learner"] = ilc::learner_name(o.learner);
  n["stages"]["stage1"] = o.stages.stage1_trials;
  n["stages"]["stage2"] = o.stages.stage2_trials;
  for (int i = 0; i < 6; ++i) n["weights"]["q_e"].push_back(o.weights.q_e(i));
  for (int i = 0; i < 4; ++i) n["weights"]["q_u"].push_back(o.weights.q_u(i));
  n["bounds"]["f_min"] = o.bounds.f_min;
  n["bounds"]["f_max"] = o.bounds.f_max;
  n["bounds"]["mu"] = o.bounds.mu;
  n["tolerances"]["x"] = o.tol.x;
  n["tolerances"]["z"] = o.tol.z;
  n["tolerances"]["theta_deg"] = rad2deg(o.tol.theta);
  n["max_trials"] = o.max_trials;
  n["flight_error_model"] = ilc::flight_model_name(o.flight);
  n["reference"] = s.reference;
  n["reference_rollouts"] = s.reference_rollouts;
  if (s.transfer_source) n["transfer_source"] = *s.transfer_source;
  return n;
}

inline std::string to_yaml(const TaskSpec& s) {
  YAML::Emitter out;
  out.SetDoublePrecision(15);
  out << expand(s);
  return std::string(out.c_str()) + "\n";
}

/// Copy of `s` with the numeric field at dotted `path` (e.g. "ground.k_p",
/// "weights.q_e.1") set to `value`.
inline TaskSpec with_value(const TaskSpec& s, const std::string& path, double value) {
  YAML::Node root = YAML::Clone(expand(s));
  std::vector<std::string> parts;
  std::stringstream ss(path);
  for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
  if (parts.empty()) throw TaskFileError(path, "empty parameter path");
  // yaml-cpp nodes are handles; walk with a copy per level.
  std::vector<YAML::Node> chain{root};
  for (size_t i = 0; i < parts.size(); ++i) {
    const YAML::Node& cur = chain.back();
    YAML::Node next;
    if (cur.IsMap() && cur[parts[i]]) {
      next = cur[parts[i]];
    } else if (cur.IsSequence()) {
      char* end = nullptr;
      const long idx = std::strtol(parts[i].c_str(), &end, 10);
      if (*end != '\0' || idx < 0 || idx >= static_cast<long>(cur.size())) {
        throw TaskFileError(path, "no such parameter");
      }
      next = cur[static_cast<size_t>(idx)];
    } else {
      throw TaskFileError(path, "no such parameter");
    }
    chain.push_back(next);
  }
  YAML::Node leaf = chain.back();
  if (!leaf.IsScalar()) throw TaskFileError(path, "not a numeric field");
  try {
    (void)leaf.as<double>();
  } catch (const YAML::Exception&) {
    throw TaskFileError(path, "not a numeric field");
  }
  leaf = value;
  return parse_task(root);
}

}  // namespace ilcjump::experiment
