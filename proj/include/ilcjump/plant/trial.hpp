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


// One jump on the articulated plant: settle in the standing pose, then run
// the contact schedule with zero-order-hold foot forces at the ILC rate and
// the joint controller at 1 kHz, logging every ILC sample up to N.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ilcjump/model/kinematics.hpp"
#include "ilcjump/plant/actuator.hpp"
#include "ilcjump/plant/dynamics.hpp"
#include "ilcjump/plant/ground.hpp"
#include "ilcjump/plant/task.hpp"
#include "ilcjump/reference/bundle.hpp"

namespace ilcjump {

struct FailureFlags {
  bool diverged = false;
  long diverged_tick = -1;
  bool collision = false;
  int collision_sample = -1;
  bool bad_landing = false;

  bool any() const { return diverged || collision || bad_landing; }
};

struct TrialMeta {
  int trial = 0;
  std::string task_id;
  std::string learner_id;
  int stage = 0;
};

struct TrialRecord {
  std::vector<BodyState> body;     // trunk CoM, N + 1
  std::vector<LegState> joints;    // N + 1
  std::vector<FootGeometry> feet;  // feet relative to the trunk CoM, N + 1
  std::vector<Vec2> com_velocity;  // whole-robot CoM velocity, N + 1
  ControlSequence commanded_u;     // N_c
  ControlSequence applied_u;       // mean ground force per contact sample, N_c
  std::vector<Vec4> ground;        // mean ground force per sample, N
  std::vector<Vec4> torques;       // per motor, first tick of each sample, N
  std::vector<Vec4> voltages;      // per motor, N
  std::vector<Vec6> errors;        // body_ref[t] - body[t], N + 1
  FailureFlags flags;
  TrialMeta meta;

  const Vec6& final_error() const { return errors.back(); }
};

struct TrialOptions {
  std::vector<Vec4> tau_extra;  // per-motor joint torque feedforward, N samples
  TrialMeta meta;
};

namespace detail {

inline LegJoints lerp(const LegJoints& a, const LegJoints& b, double w) {
  return {(1.0 - w) * a.q + w * b.q, (1.0 - w) * a.qdot + w * b.qdot};
}

inline LegState leg_state(const Vec7& s, const Vec7& sd) {
  LegState ls;
  ls.front = {s.segment<2>(3), sd.segment<2>(3)};
  ls.rear = {s.segment<2>(5), sd.segment<2>(5)};
  return ls;
}

inline BodyState trunk_state(const Vec7& s, const Vec7& sd) {
  return {s(0), s(1), s(2), sd(0), sd(1), sd(2)};
}

}  // namespace detail

class TrialRunner {
 public:
  TrialRunner(const ReferenceBundle& refs, const JumpTask& task)
      : refs_(refs),
        task_(task),
        plant_(task.robot, task.payload, task.sim.leg_mass_pairs),
        leg_(LegGeometry::from(task.robot)) {
    task.robot.validate();
    task.actuator.validate();
    task.ground.validate();
    task.gains.validate();
    task.schedule.validate();
    const int n = task.schedule.n();
    if (static_cast<int>(refs.body_ref.size()) != n + 1 ||
        static_cast<int>(refs.joint_ref.size()) != n + 1) {
      throw DimensionError("reference length must be N + 1");
    }
    settle();
  }

  const Vec7& initial_s() const { return s0_; }
  const Vec7& initial_sd() const { return sd0_; }
  const ArticulatedPlant& plant() const { return plant_; }

  TrialRecord run(const ControlSequence& u, const TrialOptions& opt = {}) const {
    const PhaseSchedule& sch = task_.schedule;
    const int n = sch.n();
    const int nc = sch.n_c();
    if (static_cast<int>(u.size()) != nc) {
      throw DimensionError("control sequence must have N_c samples");
    }
    if (!opt.tau_extra.empty() && static_cast<int>(opt.tau_extra.size()) != n) {
      throw DimensionError("joint torque feedforward must have N samples");
    }
    const int ticks = tick_count();
    const int sub = task_.sim.substeps;
    const double h = sch.dt / ticks / sub;

    TrialRecord rec;
    rec.meta = opt.meta;
    rec.commanded_u = u;
    Vec7 s = s0_;
    Vec7 sd = sd0_;
    std::array<double, 2> anchor = anchors0_;
    std::optional<Box> box = task_.box;
    bool alive = true;
    long tick_index = 0;

    for (int t = 0; t <= n; ++t) {
      log_sample(rec, s, sd);
      if (t == n) break;
      Vec4 ground_sum = Vec4::Zero();
      const Vec2 uf = (alive && sch.front_in_contact(t)) ? Vec2(u[t].head<2>()) : Vec2::Zero();
      const Vec2 ur = (alive && sch.rear_in_contact(t)) ? Vec2(u[t].tail<2>()) : Vec2::Zero();
      const Vec4 extra = opt.tau_extra.empty() ? Vec4::Zero() : opt.tau_extra[t];
      for (int k = 0; k < ticks && alive; ++k, ++tick_index) {
        const double w = static_cast<double>(k) / ticks;
        const LegState ref{detail::lerp(refs_.joint_ref[t].front, refs_.joint_ref[t + 1].front, w),
                           detail::lerp(refs_.joint_ref[t].rear, refs_.joint_ref[t + 1].rear, w)};
        Vec4 tau_motor, volts;
        const Vec4 tau = control(s, sd, ref, uf, ur, extra, tau_motor, volts);
        if (k == 0) {
          rec.torques.push_back(tau_motor);
          rec.voltages.push_back(volts);
        }
        for (int j = 0; j < sub; ++j) {
          std::array<Vec2, 2> f;
          if (box && check_collision(s, sd, h, *box)) {
            rec.flags.collision = true;
            rec.flags.collision_sample = t;
            box.reset();  // keep flying so the final error stays defined
          }
          for (int leg = 0; leg < 2; ++leg) {
            const Leg l = static_cast<Leg>(leg);
            const Vec2 p = plant_.foot(s, l);
            const double gh = (box && p.x() >= box->face_x) ? box->height : 0.0;
            const auto gr = ground_reaction(p, plant_.foot_velocity(s, sd, l),
                                            anchor[static_cast<size_t>(leg)], task_.ground, gh);
            anchor[static_cast<size_t>(leg)] = gr.anchor;
            f[static_cast<size_t>(leg)] = gr.force;
          }
          ground_sum.head<2>() += f[0];
          ground_sum.tail<2>() += f[1];
          const Vec7 prev_s = s;
          const Vec7 prev_sd = sd;
          sd += h * plant_.accel(s, sd, tau, f[0], f[1]);
          s += h * sd;
          if (!s.allFinite() || !sd.allFinite() ||
              sd.cwiseAbs().maxCoeff() > task_.sim.divergence_speed) {
            // Freeze at the last good state so the record keeps its shape.
            s = prev_s;
            sd = prev_sd;
            alive = false;
            rec.flags.diverged = true;
            rec.flags.diverged_tick = tick_index;
            break;
          }
        }
      }
      if (!alive) {
        if (static_cast<int>(rec.torques.size()) <= t) {
          rec.torques.push_back(Vec4::Zero());
          rec.voltages.push_back(Vec4::Zero());
        }
      }
      rec.ground.push_back(ground_sum / (ticks * sub));
      if (t < nc) rec.applied_u.push_back(rec.ground.back());
    }

    rec.errors.reserve(rec.body.size());
    for (size_t t = 0; t < rec.body.size(); ++t) {
      rec.errors.push_back(refs_.body_ref[t].vector() - rec.body[t].vector());
    }
    rec.flags.bad_landing = std::abs(rec.body.back().theta) > task_.sim.bad_landing;
    return rec;
  }

 private:
  static constexpr int kTicksPerSecond = 1000;

  int tick_count() const {
    return std::max(1, static_cast<int>(std::lround(task_.schedule.dt * kTicksPerSecond)));
  }

  Vec4 control(const Vec7& s, const Vec7& sd, const LegState& ref, const Vec2& uf,
               const Vec2& ur, const Vec4& extra, Vec4& tau_motor, Vec4& volts) const {
    const LegState meas = detail::leg_state(s, sd);
    // Each planar leg is a pair of real legs sharing the load evenly.
    const auto front = low_level_step(ref.front, meas.front, 0.5 * uf, s(2), task_.gains,
                                      task_.actuator, leg_, extra.head<2>());
    const auto rear = low_level_step(ref.rear, meas.rear, 0.5 * ur, s(2), task_.gains,
                                     task_.actuator, leg_, extra.tail<2>());
    tau_motor << front.tau, rear.tau;
    volts << front.volts, rear.volts;
    return 2.0 * tau_motor;
  }

  bool check_collision(const Vec7& s, const Vec7& sd, double h, const Box& box) const {
    auto inside = [&](const Vec2& p) { return p.x() >= box.face_x && p.y() < box.height; };
    for (int i = 0; i < 4; ++i) {
      if (inside(plant_.corner(s, i))) return true;
    }
    for (int leg = 0; leg < 2; ++leg) {
      const Leg l = static_cast<Leg>(leg);
      const Vec2 p = plant_.foot(s, l);
      const Vec2 prev = p - h * plant_.foot_velocity(s, sd, l);
      // A foot that crossed the face below the top hit the side.
      if (inside(p) && prev.x() < box.face_x) return true;
    }
    return false;
  }

  void log_sample(TrialRecord& rec, const Vec7& s, const Vec7& sd) const {
    rec.body.push_back(detail::trunk_state(s, sd));
    const LegState ls = detail::leg_state(s, sd);
    rec.joints.push_back(ls);
    const Vec2 hip(task_.robot.hip_x(), 0.0);
    rec.feet.push_back({leg_fk(ls.front.q, hip, s(2), leg_), leg_fk(ls.rear.q, -hip, s(2), leg_)});
    rec.com_velocity.push_back(plant_.com_velocity(s, sd));
  }

  // Place the robot on its footholds in the reference stance pose and let it
  // sag under the static support forces. Every trial starts from the result.
  void settle() {
    const BodyState& b0 = refs_.body_ref.front();
    const LegState& j0 = refs_.joint_ref.front();
    s0_ << b0.p_x, b0.p_z, b0.theta, j0.front.q, j0.rear.q;
    // Drop onto z = 0: lowest foot touches the ground.
    const double lift = std::min(plant_.foot(s0_, kFront).y(), plant_.foot(s0_, kRear).y());
    s0_(1) -= lift;
    sd0_.setZero();
    anchors0_ = {plant_.foot(s0_, kFront).x(), plant_.foot(s0_, kRear).x()};

    const double rf = plant_.foot(s0_, kFront).x() - s0_(0);
    const double rr = plant_.foot(s0_, kRear).x() - s0_(0);
    // Nominal robot weight; a payload stays unknown to the controller.
    const ArticulatedPlant nominal(task_.robot, Payload{}, task_.sim.leg_mass_pairs);
    const double weight = nominal.total_mass() * task_.robot.gravity;
    const Vec2 uf(0.0, weight * (-rr) / (rf - rr));
    const Vec2 ur(0.0, weight * rf / (rf - rr));

    const int ticks = static_cast<int>(std::lround(task_.sim.settle_time * kTicksPerSecond));
    const int sub = task_.sim.substeps;
    const double h = 1.0 / kTicksPerSecond / sub;
    for (int k = 0; k < ticks; ++k) {
      Vec4 tm, v;
      const Vec4 tau = control(s0_, sd0_, j0, uf, ur, Vec4::Zero(), tm, v);
      for (int j = 0; j < sub; ++j) {
        std::array<Vec2, 2> f;
        for (int leg = 0; leg < 2; ++leg) {
          const Leg l = static_cast<Leg>(leg);
          const auto gr = ground_reaction(plant_.foot(s0_, l), plant_.foot_velocity(s0_, sd0_, l),
                                          anchors0_[static_cast<size_t>(leg)], task_.ground);
          anchors0_[static_cast<size_t>(leg)] = gr.anchor;
          f[static_cast<size_t>(leg)] = gr.force;
        }
        sd0_ += h * plant_.accel(s0_, sd0_, tau, f[0], f[1]);
        s0_ += h * sd0_;
      }
    }
    if (!s0_.allFinite() || !sd0_.allFinite()) {
      throw ModelInputError("standing pose diverged while settling");
    }
  }

  ReferenceBundle refs_;
  JumpTask task_;
  ArticulatedPlant plant_;
  LegGeometry leg_;
  Vec7 s0_ = Vec7::Zero();
  Vec7 sd0_ = Vec7::Zero();
  std::array<double, 2> anchors0_{};
};

inline TrialRecord run_trial(const ControlSequence& u, const ReferenceBundle& refs,
                             const JumpTask& task, const TrialOptions& opt = {}) {
  return TrialRunner(refs, task).run(u, opt);
}

}  // namespace ilcjump
