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


// Run directory layout:
//   task.yaml        fully expanded task
//   trials.csv       one row per sample per trial
//   summary.json     per-trial landing errors, flags, timing
//   plotdata/        errors.csv, landing.csv
//   learned.json     reference bundle and last commanded forces
// Trials are numbered from 1 in every file.

#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ilcjump/errors.hpp"
#include "ilcjump/experiment/task_file.hpp"
#include "ilcjump/ilc/learner.hpp"

namespace ilcjump::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

inline const char* kTrialsHeader =
    "trial,t,phase,x,z,theta,xdot,zdot,thetadot,"
    "x_ref,z_ref,theta_ref,xdot_ref,zdot_ref,thetadot_ref,"
    "u_fx_front,u_fz_front,u_fx_rear,u_fz_rear,"
    "tau_front_hip,tau_front_knee,tau_rear_hip,tau_rear_knee,"
    "v_front_hip,v_front_knee,v_rear_hip,v_rear_knee,"
    "f_fx_front,f_fz_front,f_fx_rear,f_fz_rear";

// Shortest text that reads back to the same double; empty for non-finite.
inline std::string fmt(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  for (int p = 6; p < 17; ++p) {
    char s[32];
    std::snprintf(s, sizeof s, "%.*g", p, v);
    if (std::strtod(s, nullptr) == v) return s;
  }
  return buf;
}

// Non-finite values become null.
inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ModelInputError("cannot write " + p.string());
  f << s;
}

inline std::string read_text(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw ModelInputError("cannot read " + p.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

namespace detail {

inline void put(std::string& row, double v) {
  row += ',';
  row += fmt(v);
}

inline void put4(std::string& row, const std::vector<Vec4>& seq, int t) {
  for (int i = 0; i < 4; ++i) {
    if (t < static_cast<int>(seq.size())) {
      put(row, seq[static_cast<size_t>(t)](i));
    } else {
      row += ',';
    }
  }
}

}  // namespace detail

inline std::string trials_csv(const ilc::History& h, const ReferenceBundle& refs) {
  const PhaseSchedule& sch = refs.schedule;
  std::string out = kTrialsHeader;
  out += '\n';
  for (size_t k = 0; k < h.trials.size(); ++k) {
    const TrialRecord& r = h.trials[k].record;
    for (size_t t = 0; t < r.body.size(); ++t) {
      const int ti = static_cast<int>(t);
      std::string row = std::to_string(k + 1) + "," + fmt(ti * sch.dt) + "," +
                        phase_name(sch.phase(ti));
      const Vec6 x = r.body[t].vector();
      for (int i = 0; i < 6; ++i) detail::put(row, x(i));
      const Vec6 xr = refs.body_ref[t].vector();
      for (int i = 0; i < 6; ++i) detail::put(row, xr(i));
      detail::put4(row, r.commanded_u, ti);
      detail::put4(row, r.torques, ti);
      detail::put4(row, r.voltages, ti);
      detail::put4(row, r.ground, ti);
      out += row;
      out += '\n';
    }
  }
  return out;
}

inline json flags_json(const FailureFlags& f) {
  return {{"diverged", f.diverged},
          {"collision", f.collision},
          {"bad_landing", f.bad_landing}};
}

inline int violation_count(const ilc::History& h, double tol = 1e-6) {
  int n = 0;
  for (const auto& r : h.trials) n += r.updated && r.constraint_violation > tol;
  return n;
}

inline json summary_json(const ilc::History& h, bool seedless) {
  json trials = json::array();
  for (size_t k = 0; k < h.trials.size(); ++k) {
    const auto& r = h.trials[k];
    const Vec6 e = r.record.final_error();
    json j = {{"trial", k + 1},
              {"e_x", num(e(0))},
              {"e_z", num(e(1))},
              {"e_theta", num(e(2))},
              {"e_theta_deg", num(rad2deg(e(2)))},
              {"within_tolerance", r.within_tol},
              {"flags", flags_json(r.record.flags)},
              {"stage", r.record.meta.stage},
              {"wall_seconds", num(r.wall_seconds)},
              {"joint_error", num(r.joint_error)}};
    if (r.updated) {
      j["qp_status"] = qp::status_name(r.update.status);
      j["qp_seconds"] = num(r.update.qp_seconds);
      j["qp_fallback"] = r.update.fallback;
      j["dropped_mdc_rows"] = r.dropped_mdc_rows;
      j["constraint_violation"] = num(r.constraint_violation);
    }
    trials.push_back(std::move(j));
  }
  return {{"task_id", h.task_id},
          {"learner", ilc::learner_name(h.learner)},
          {"converged", h.converged},
          {"trial_count", h.trial_count()},
          {"constraint_violation_count", violation_count(h)},
          {"seedless", seedless},
          {"trials", std::move(trials)}};
}

inline std::string errors_csv(const ilc::History& h) {
  std::string out = "trial,e_x,e_z,e_theta_deg,distance_error\n";
  for (size_t k = 0; k < h.trials.size(); ++k) {
    const Vec6 e = h.trials[k].record.final_error();
    out += std::to_string(k + 1) + "," + fmt(e(0)) + "," + fmt(e(1)) + "," +
           fmt(rad2deg(e(2))) + "," + fmt(std::hypot(e(0), e(1))) + "\n";
  }
  return out;
}

inline std::string landing_csv(const ilc::History& h) {
  std::string out = "trial,x_N,z_N,theta_N_deg,bad_landing\n";
  for (size_t k = 0; k < h.trials.size(); ++k) {
    const TrialRecord& r = h.trials[k].record;
    const BodyState& b = r.body.back();
    out += std::to_string(k + 1) + "," + fmt(b.p_x) + "," + fmt(b.p_z) + "," +
           fmt(rad2deg(b.theta)) + "," + (r.flags.bad_landing ? "1" : "0") + "\n";
  }
  return out;
}

// What a transfer needs from a finished run.
struct LearnedRun {
  ReferenceBundle refs;
  ControlSequence u;  // forces of the last executed trial
  bool converged = false;
  std::string task_id;
};

namespace detail {

inline json vec(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

template <int N>
Eigen::Matrix<double, N, 1> vec_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != N) throw ModelInputError(std::string("learned run: bad ") + what);
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v(i) = j[static_cast<size_t>(i)].get<double>();
  return v;
}

}  // namespace detail

inline json learned_json(const LearnedRun& l) {
  const ReferenceBundle& b = l.refs;
  json body = json::array(), joints = json::array(), u_init = json::array(), u = json::array();
  for (const auto& s : b.body_ref) body.push_back(detail::vec(s.vector()));
  for (const auto& s : b.joint_ref) {
    Eigen::Matrix<double, 8, 1> v;
    v << s.q(), s.qdot();
    joints.push_back(detail::vec(v));
  }
  for (const auto& s : b.u_init) u_init.push_back(detail::vec(s));
  for (const auto& s : l.u) u.push_back(detail::vec(s));
  return {{"task_id", l.task_id},
          {"converged", l.converged},
          {"schedule", {{"n_dc", b.schedule.n_dc}, {"n_sc", b.schedule.n_sc},
                        {"n_fl", b.schedule.n_fl}, {"dt", b.schedule.dt}}},
          {"footholds", {{"front_x", b.footholds.front_x}, {"rear_x", b.footholds.rear_x},
                         {"stand_height", b.footholds.stand_height},
                         {"tuck", detail::vec(b.footholds.tuck)}}},
          {"body_ref", std::move(body)},
          {"joint_ref", std::move(joints)},
          {"u_init", std::move(u_init)},
          {"u", std::move(u)}};
}

inline LearnedRun learned_from_json(const json& j) {
  LearnedRun l;
  try {
    l.task_id = j.at("task_id").get<std::string>();
    l.converged = j.at("converged").get<bool>();
    const json& s = j.at("schedule");
    PhaseSchedule& sch = l.refs.schedule;
    sch.n_dc = s.at("n_dc").get<int>();
    sch.n_sc = s.at("n_sc").get<int>();
    sch.n_fl = s.at("n_fl").get<int>();
    sch.dt = s.at("dt").get<double>();
    const json& f = j.at("footholds");
    l.refs.footholds.front_x = f.at("front_x").get<double>();
    l.refs.footholds.rear_x = f.at("rear_x").get<double>();
    l.refs.footholds.stand_height = f.at("stand_height").get<double>();
    l.refs.footholds.tuck = detail::vec_from<2>(f.at("tuck"), "tuck");
    for (const auto& v : j.at("body_ref")) {
      l.refs.body_ref.push_back(BodyState::from_vector(detail::vec_from<6>(v, "body_ref")));
    }
    for (const auto& v : j.at("joint_ref")) {
      const auto x = detail::vec_from<8>(v, "joint_ref");
      LegState ls;
      ls.front = {x.segment<2>(0), x.segment<2>(4)};
      ls.rear = {x.segment<2>(2), x.segment<2>(6)};
      l.refs.joint_ref.push_back(ls);
    }
    for (const auto& v : j.at("u_init")) l.refs.u_init.push_back(detail::vec_from<4>(v, "u_init"));
    for (const auto& v : j.at("u")) l.u.push_back(detail::vec_from<4>(v, "u"));
  } catch (const json::exception& e) {
    throw ModelInputError(std::string("learned run: ") + e.what());
  }
  const PhaseSchedule& sch = l.refs.schedule;
  sch.validate();
  if (static_cast<int>(l.refs.body_ref.size()) != sch.n() + 1 ||
      static_cast<int>(l.refs.joint_ref.size()) != sch.n() + 1 ||
      static_cast<int>(l.refs.u_init.size()) != sch.n_c() ||
      static_cast<int>(l.u.size()) != sch.n_c()) {
    throw DimensionError("learned run: sequence lengths do not match the schedule");
  }
  return l;
}

inline LearnedRun load_learned(const fs::path& run_dir) {
  const fs::path p = run_dir / "learned.json";
  if (!fs::exists(p)) throw ModelInputError("no learned.json in " + run_dir.string());
  json j;
  try {
    j = json::parse(read_text(p));
  } catch (const json::exception& e) {
    throw ModelInputError(p.string() + ": " + e.what());
  }
  return learned_from_json(j);
}

/// Writes the whole run directory.
inline void write_run(const fs::path& dir, const TaskSpec& spec, const ilc::History& h,
                      const ReferenceBundle& refs, bool seedless) {
  fs::create_directories(dir / "plotdata");
  write_text(dir / "task.yaml", to_yaml(spec));
  write_text(dir / "trials.csv", trials_csv(h, refs));
  write_text(dir / "summary.json", summary_json(h, seedless).dump(2) + "\n");
  write_text(dir / "plotdata" / "errors.csv", errors_csv(h));
  write_text(dir / "plotdata" / "landing.csv", landing_csv(h));
  LearnedRun l{refs, h.trials.empty() ? refs.u_init : h.last().u, h.converged, h.task_id};
  write_text(dir / "learned.json", learned_json(l).dump() + "\n");
}

}  // namespace ilcjump::experiment
