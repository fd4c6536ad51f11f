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


// Stage-scheduled learning update and the learning loops.

#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ilcjump/ilc/constraints.hpp"
#include "ilcjump/ilc/lifted.hpp"
#include "ilcjump/model/srb.hpp"
#include "ilcjump/plant/trial.hpp"
#include "ilcjump/qp/qp.hpp"
#include "ilcjump/reference/generator.hpp"

namespace ilcjump::ilc {

/// Stage 0 selects the whole horizon (the full-trajectory baseline).
struct StageSchedule {
  int stage1_trials = 5;
  int stage2_trials = 5;

  int stage_of(int k) const {
    if (k < stage1_trials) return 1;
    if (k < stage1_trials + stage2_trials) return 2;
    return 3;
  }

  void validate() const {
    if (stage1_trials < 0 || stage2_trials < 0) {
      throw ModelInputError("stage trial counts must be non-negative");
    }
  }
};

/// Samples (1-based) whose error enters the objective.
inline std::vector<int> stage_window(int stage, const PhaseSchedule& sch) {
  int lo = 1, hi = sch.n();
  switch (stage) {
    case 0: break;
    case 1: hi = sch.n_c(); break;
    case 2: lo = sch.n_dc; break;
    case 3: lo = sch.n(); break;
    default: throw ModelInputError("stage must be 0, 1, 2 or 3");
  }
  std::vector<int> w;
  for (int t = lo; t <= hi; ++t) w.push_back(t);
  return w;
}

struct IlcWeights {
  Vec6 q_e = (Vec6() << 1.0, 3.0, 3.0, 0.01, 0.01, 0.01).finished();
  Vec4 q_u = Vec4::Constant(1e-5);

  void validate() const {
    if ((q_e.array() < 0.0).any() || (q_u.array() <= 0.0).any()) {
      throw ModelInputError("weights: q_e must be >= 0 and q_u > 0");
    }
  }
};

struct IlcUpdate {
  ControlSequence du;
  ControlSequence u_next;
  qp::QpStatus status = qp::QpStatus::kOptimal;
  bool fallback = false;
  double objective = 0.0;       // QP objective at du (0 at du = 0)
  double predicted_cost = 0.0;  // windowed weighted error after du
  double current_cost = 0.0;    // windowed weighted error of trial k
  double qp_seconds = 0.0;
  int stage = 0;
};

inline qp::QpProblem build_qp(const std::vector<Vec6>& e_k, const LiftedModel& lm,
                              const IlcWeights& w, const std::vector<int>& window,
                              const ConstraintSet& cs) {
  const MatrixXd gw = lm.rows(window);
  VectorXd ew(gw.rows());
  VectorXd qe(gw.rows());
  for (size_t i = 0; i < window.size(); ++i) {
    const auto r = 6 * static_cast<Eigen::Index>(i);
    ew.segment<6>(r) = e_k[static_cast<size_t>(window[i])];
    qe.segment<6>(r) = w.q_e;
  }
  const Eigen::Index n = lm.g.cols();
  VectorXd qu(n);
  for (Eigen::Index j = 0; j < n; j += 4) qu.segment<4>(j) = w.q_u;

  qp::QpProblem p;
  p.w = 2.0 * (gw.transpose() * qe.asDiagonal() * gw);
  p.w.diagonal() += 2.0 * qu;
  p.w = 0.5 * (p.w + p.w.transpose());
  p.h = -2.0 * gw.transpose() * (qe.asDiagonal() * ew);
  p.g_mat = cs.g_mat;
  p.g_vec = cs.g_vec;
  p.e_mat = cs.e_mat;
  p.e_vec = cs.e_vec;
  return p;
}

inline double windowed_cost(const std::vector<Vec6>& e, const IlcWeights& w,
                            const std::vector<int>& window) {
  double c = 0.0;
  for (int t : window) {
    const Vec6& et = e[static_cast<size_t>(t)];
    c += et.dot(w.q_e.cwiseProduct(et));
  }
  return c;
}

/// One learning update. An infeasible or failed QP leaves u unchanged.
inline IlcUpdate ilc_step(const std::vector<Vec6>& e_k, const ControlSequence& u_k,
                          const LiftedModel& lm, const IlcWeights& w, int stage,
                          const PhaseSchedule& sch, const ConstraintSet& cs,
                          const qp::QpSettings& qs = {}) {
  w.validate();
  if (static_cast<int>(u_k.size()) != lm.n_c) {
    throw DimensionError("ilc_step: u has " + std::to_string(u_k.size()) +
                         " samples, expected " + std::to_string(lm.n_c));
  }
  const auto window = stage_window(stage, sch);
  const qp::QpProblem p = build_qp(e_k, lm, w, window, cs);

  IlcUpdate up;
  up.stage = stage;
  up.current_cost = windowed_cost(e_k, w, window);
  const auto t0 = std::chrono::steady_clock::now();
  const qp::QpSolution sol = qp::solve(p, qs);
  up.qp_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  up.status = sol.status;

  VectorXd du = VectorXd::Zero(lm.g.cols());
  if (sol.status == qp::QpStatus::kOptimal) {
    du = sol.z;
    up.objective = sol.objective;
  } else {
    up.fallback = true;
  }
  up.du = unstack_inputs(du);
  up.u_next = u_k;
  for (size_t t = 0; t < u_k.size(); ++t) up.u_next[t] += up.du[t];
  up.predicted_cost = windowed_cost(predict_error(e_k, lm, du), w, window);
  return up;
}

/// Linear model around trial k: input matrices from the logged feet.
inline DiscreteModel model_from_trial(const TrialRecord& trial, const PhaseSchedule& sch,
                                      const RobotParams& robot) {
  const auto nc = static_cast<size_t>(sch.n_c());
  if (trial.feet.size() < nc) throw DimensionError("model_from_trial: short foot log");
  std::vector<FootGeometry> feet(trial.feet.begin(), trial.feet.begin() + static_cast<long>(nc));
  return discretize(feet, sch, robot);
}

struct Tolerances {
  double x = 0.02;
  double z = 0.03;
  double theta = deg2rad(2.0);

  bool met(const Vec6& e) const {
    return std::abs(e(0)) <= x && std::abs(e(1)) <= z && std::abs(e(2)) <= theta;
  }
};

enum class Learner { kProposed, kPdIlc, kIlcMpc };

inline const char* learner_name(Learner l) {
  switch (l) {
    case Learner::kProposed: return "proposed";
    case Learner::kPdIlc: return "pd-ilc";
    case Learner::kIlcMpc: return "ilc-mpc";
  }
  return "?";
}

inline Learner parse_learner(const std::string& s) {
  if (s == "proposed") return Learner::kProposed;
  if (s == "pd-ilc") return Learner::kPdIlc;
  if (s == "ilc-mpc") return Learner::kIlcMpc;
  throw ModelInputError("unknown learner '" + s + "'");
}

struct PdIlcGains {
  double l_p = 50.0;
  double l_d = 1.0;
};

struct LearnOptions {
  Learner learner = Learner::kProposed;
  StageSchedule stages;
  IlcWeights weights;
  ForceBounds bounds;
  Tolerances tol;
  int max_trials = 25;  // trials executed at most
  FlightErrorModel flight = FlightErrorModel::kPropagated;
  PdIlcGains pd;
  qp::QpSettings qp;
};

struct TrialResult {
  TrialRecord record;
  ControlSequence u;           // forces commanded in this trial
  std::vector<Vec4> tau_ff;    // learned joint feedforward (pd-ilc only)
  double joint_error = 0.0;    // mean |q - q_ref| over samples 1..N
  bool within_tol = false;
  // The update computed from this trial (absent on the last one).
  bool updated = false;
  IlcUpdate update;
  int dropped_mdc_rows = 0;
  double constraint_violation = 0.0;  // of u_next against this trial's rows
  double wall_seconds = 0.0;
};

struct History {
  std::string task_id;
  Learner learner = Learner::kProposed;
  std::vector<TrialResult> trials;
  bool converged = false;

  int trial_count() const { return static_cast<int>(trials.size()); }
  const TrialResult& last() const { return trials.back(); }
};

inline double joint_tracking_error(const TrialRecord& rec, const ReferenceBundle& refs) {
  double sum = 0.0;
  int cnt = 0;
  for (size_t t = 1; t < rec.joints.size(); ++t) {
    sum += (rec.joints[t].q() - refs.joint_ref[t].q()).cwiseAbs().sum();
    cnt += 4;
  }
  return cnt > 0 ? sum / cnt : 0.0;
}

/// tau_{k+1}(t) = tau_k(t) + L_p e_q(t+1) + L_d de_q(t+1), clamped per motor.
inline std::vector<Vec4> pd_type_ilc_step(const TrialRecord& rec, const ReferenceBundle& refs,
                                          const std::vector<Vec4>& tau_k, const PdIlcGains& g,
                                          const ActuatorParams& act) {
  const size_t n = rec.joints.size() - 1;
  if (tau_k.size() != n || refs.joint_ref.size() != n + 1) {
    throw DimensionError("pd_type_ilc_step: length mismatch");
  }
  std::vector<Vec4> out(n);
  for (size_t t = 0; t < n; ++t) {
    const Vec4 eq = refs.joint_ref[t + 1].q() - rec.joints[t + 1].q();
    const Vec4 ed = refs.joint_ref[t + 1].qdot() - rec.joints[t + 1].qdot();
    const Vec4 cmd = tau_k[t] + g.l_p * eq + g.l_d * ed;
    const Vec4 qd = rec.joints[t].qdot();
    for (int j = 0; j < 4; ++j) out[t](j) = actuator_clamp(cmd(j), qd(j), act).tau;
  }
  return out;
}

using TrialCallback = std::function<void(const TrialResult&)>;

namespace detail {

inline TrialResult execute(const TrialRunner& runner, const ReferenceBundle& refs,
                           const JumpTask& task, const LearnOptions& opt, int k,
                           const ControlSequence& u, const std::vector<Vec4>& tau_ff,
                           int stage) {
  const auto t0 = std::chrono::steady_clock::now();
  TrialOptions to;
  to.tau_extra = tau_ff;
  to.meta = {k, task.id, learner_name(opt.learner), stage};
  TrialResult r;
  r.record = runner.run(u, to);
  r.u = u;
  r.tau_ff = tau_ff;
  r.joint_error = joint_tracking_error(r.record, refs);
  r.within_tol = opt.tol.met(r.record.final_error()) && !r.record.flags.any();
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline int stage_for(const LearnOptions& opt, int k, bool goal_only) {
  if (goal_only) return 3;
  if (opt.learner == Learner::kIlcMpc) return 0;
  if (opt.learner == Learner::kPdIlc) return 0;
  return opt.stages.stage_of(k);
}

/// Shared loop; `goal_only` pins every update to the final-sample window.
inline History learn_loop(const JumpTask& task, const ReferenceBundle& refs,
                          const ControlSequence& u0, const LearnOptions& opt, bool goal_only,
                          const TrialCallback& cb) {
  opt.stages.validate();
  opt.weights.validate();
  opt.bounds.validate();
  const PhaseSchedule& sch = task.schedule;
  if (static_cast<int>(u0.size()) != sch.n_c()) {
    throw DimensionError("learning: u0 must have N_c samples");
  }
  const TrialRunner runner(refs, task);
  History h;
  h.task_id = task.id;
  h.learner = opt.learner;
  ControlSequence u = u0;
  std::vector<Vec4> tau_ff(static_cast<size_t>(sch.n()), Vec4::Zero());
  for (int k = 0; k < std::max(1, opt.max_trials); ++k) {
    const int stage = stage_for(opt, k, goal_only);
    TrialResult r = execute(runner, refs, task, opt, k, u, tau_ff, stage);
    const bool stop = r.within_tol || k + 1 >= opt.max_trials || r.record.flags.diverged;
    if (!stop) {
      if (opt.learner == Learner::kPdIlc) {
        tau_ff = pd_type_ilc_step(r.record, refs, tau_ff, opt.pd, task.actuator);
      } else {
        const DiscreteModel dm = model_from_trial(r.record, sch, task.robot);
        const LiftedModel lm = build_lifted(dm, sch, opt.flight);
        const ConstraintSet cs =
            assemble_constraints(r.record, u, task.actuator, opt.bounds, sch, task.robot);
        r.update = ilc_step(r.record.errors, u, lm, opt.weights, stage, sch, cs, opt.qp);
        r.updated = true;
        r.dropped_mdc_rows = cs.dropped_mdc_rows;
        r.constraint_violation = cs.violation(stack_inputs(r.update.du));
        u = r.update.u_next;
      }
    }
    h.converged = r.within_tol;
    if (cb) cb(r);
    h.trials.push_back(std::move(r));
    if (stop) break;
  }
  return h;
}

}  // namespace detail

/// Learns `task` from the reference's initial forces. `max_trials` counts
/// executed trials; at least one trial always runs.
inline History run_learning(const JumpTask& task, const ReferenceBundle& refs,
                            const LearnOptions& opt, const TrialCallback& cb = {}) {
  return detail::learn_loop(task, refs, refs.u_init, opt, false, cb);
}

/// Reuses forces and joint references learned on a simpler jump. The first
/// trial replays `u_s` against the new goal; every update weights the final
/// sample only.
inline History transfer_learning(const ControlSequence& u_s, const ReferenceBundle& source,
                                 const JumpTask& task, const LearnOptions& opt,
                                 const TrialCallback& cb = {}) {
  if (source.schedule.n() != task.schedule.n() || source.schedule.n_c() != task.schedule.n_c()) {
    throw ModelInputError("transfer_learning: source and task schedules differ");
  }
  const ReferenceBundle refs =
      retarget(source, task.target, task.target_pitch, task.robot.gravity);
  LearnOptions o = opt;
  o.learner = Learner::kProposed;
  return detail::learn_loop(task, refs, u_s, o, true, cb);
}

}  // namespace ilcjump::ilc
