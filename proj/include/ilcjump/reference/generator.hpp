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


// Nominal jump references: a ballistic flight, a contact-phase CoM profile
// built from quintic acceleration shapes, a pitch plan that lands at the
// target angle, per-sample foot forces realizing that motion on the rigid
// body model, and joint references from leg IK.
//
// Every profile is integrated with the same explicit Euler rule as the
// discrete rigid body model, so replaying the feedforward through that model
// reproduces the body reference exactly.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "ilcjump/model/kinematics.hpp"
#include "ilcjump/model/srb.hpp"
#include "ilcjump/qp/qp.hpp"
#include "ilcjump/reference/bundle.hpp"

namespace ilcjump {

/// Takeoff velocity for a projectile covering `delta` in `flight_time`.
inline Vec2 ballistic_takeoff(const Vec2& delta, double flight_time, double gravity = 9.81) {
  if (!(flight_time > 0.0)) throw ModelInputError("flight time must be positive");
  return {delta.x() / flight_time, delta.y() / flight_time + 0.5 * gravity * flight_time};
}

struct EulerProfile {
  std::vector<double> p;  // n + 1
  std::vector<double> v;  // n + 1
  std::vector<double> a;  // n
};

namespace detail {

// Acceleration of the rest-to-rest unit quintic and of the unit end-velocity
// quintic, both with zero end accelerations.
inline double quintic_accel_pos(double s) { return 60 * s - 180 * s * s + 120 * s * s * s; }
inline double quintic_accel_vel(double s) { return -24 * s + 84 * s * s - 60 * s * s * s; }

inline EulerProfile integrate(double p0, double v0, const std::vector<double>& a, double dt) {
  EulerProfile out;
  out.a = a;
  out.p.push_back(p0);
  out.v.push_back(v0);
  for (double ak : a) {
    out.p.push_back(out.p.back() + dt * out.v.back());
    out.v.push_back(out.v.back() + dt * ak);
  }
  return out;
}

}  // namespace detail

/// Quintic-shaped motion from (p0, v0) to (p1, v1) over n Euler steps. The
/// two shape weights are solved on the discrete sums so the endpoint matches
/// exactly.
inline EulerProfile quintic_profile(double p0, double v0, double p1, double v1, int n,
                                    double dt) {
  std::vector<double> a_pos(static_cast<size_t>(n)), a_vel(static_cast<size_t>(n));
  for (int t = 0; t < n; ++t) {
    const double s = (t + 0.5) / n;
    a_pos[static_cast<size_t>(t)] = detail::quintic_accel_pos(s);
    a_vel[static_cast<size_t>(t)] = detail::quintic_accel_vel(s);
  }
  // v_n = v0 + dt sum a_t,  p_n = p0 + n dt v0 + dt^2 sum (n - 1 - t) a_t.
  Mat2 m = Mat2::Zero();
  for (int t = 0; t < n; ++t) {
    const double wv = dt;
    const double wp = dt * dt * (n - 1 - t);
    m(0, 0) += wp * a_pos[static_cast<size_t>(t)];
    m(0, 1) += wp * a_vel[static_cast<size_t>(t)];
    m(1, 0) += wv * a_pos[static_cast<size_t>(t)];
    m(1, 1) += wv * a_vel[static_cast<size_t>(t)];
  }
  const Vec2 rhs(p1 - p0 - n * dt * v0, v1 - v0);
  const Vec2 c = m.fullPivLu().solve(rhs);
  std::vector<double> a(static_cast<size_t>(n));
  for (int t = 0; t < n; ++t) {
    a[static_cast<size_t>(t)] = c(0) * a_pos[static_cast<size_t>(t)] + c(1) * a_vel[static_cast<size_t>(t)];
  }
  return detail::integrate(p0, v0, a, dt);
}

/// Body reference over [0, N_c] moving every coordinate from `start` to
/// `takeoff` with a quintic profile.
inline std::vector<BodyState> contact_profile(const BodyState& start, const BodyState& takeoff,
                                              const PhaseSchedule& schedule) {
  schedule.validate();
  const int n = schedule.n_c();
  const auto px = quintic_profile(start.p_x, start.v_x, takeoff.p_x, takeoff.v_x, n, schedule.dt);
  const auto pz = quintic_profile(start.p_z, start.v_z, takeoff.p_z, takeoff.v_z, n, schedule.dt);
  const auto th =
      quintic_profile(start.theta, start.omega, takeoff.theta, takeoff.omega, n, schedule.dt);
  std::vector<BodyState> out;
  for (size_t t = 0; t <= static_cast<size_t>(n); ++t) {
    out.push_back({px.p[t], pz.p[t], th.p[t], px.v[t], pz.v[t], th.v[t]});
  }
  return out;
}

/// Input-free flight appended to `ref` until it holds N + 1 samples. Pitch
/// rate is held constant.
inline void append_flight(std::vector<BodyState>& ref, const PhaseSchedule& schedule,
                          double gravity) {
  while (static_cast<int>(ref.size()) < schedule.n() + 1) {
    const BodyState& b = ref.back();
    ref.push_back({b.p_x + schedule.dt * b.v_x, b.p_z + schedule.dt * b.v_z,
                   b.theta + schedule.dt * b.omega, b.v_x, b.v_z - schedule.dt * gravity,
                   b.omega});
  }
}

struct ForceLimits {
  double f_min = 5.0;
  double f_max = 250.0;
  double mu = 0.6;
};

struct FeedforwardResult {
  ControlSequence u;
  std::vector<double> residual;  // wrench mismatch per sample
};

namespace detail {

// Wrench map u -> (F_x, F_z, M) for one contact sample.
inline Eigen::Matrix<double, 3, 4> wrench_map(const FootGeometry& f) {
  Eigen::Matrix<double, 3, 4> m;
  m << 1, 0, 1, 0,  //
      0, 1, 0, 1,   //
      -f.r_front.y(), f.r_front.x(), -f.r_rear.y(), f.r_rear.x();
  return m;
}

// Rows G u <= g for cone and normal bounds on the stance feet, equality rows
// for swing feet.
inline void force_rows(bool front, bool rear, const ForceLimits& lim, qp::QpProblem& p) {
  std::vector<Eigen::RowVector4d> g_rows;
  std::vector<double> g_vals;
  std::vector<Eigen::RowVector4d> e_rows;
  for (int foot = 0; foot < 2; ++foot) {
    const bool stance = foot == 0 ? front : rear;
    const int ix = 2 * foot;
    const int iz = ix + 1;
    auto row = [&](double cx, double cz) {
      Eigen::RowVector4d r = Eigen::RowVector4d::Zero();
      r(ix) = cx;
      r(iz) = cz;
      return r;
    };
    if (!stance) {
      e_rows.push_back(row(1, 0));
      e_rows.push_back(row(0, 1));
      continue;
    }
    g_rows.push_back(row(0, -1)), g_vals.push_back(-lim.f_min);
    g_rows.push_back(row(0, 1)), g_vals.push_back(lim.f_max);
    g_rows.push_back(row(1, -lim.mu)), g_vals.push_back(0.0);
    g_rows.push_back(row(-1, -lim.mu)), g_vals.push_back(0.0);
  }
  p.g_mat.resize(static_cast<Eigen::Index>(g_rows.size()), 4);
  p.g_vec.resize(static_cast<Eigen::Index>(g_rows.size()));
  for (size_t i = 0; i < g_rows.size(); ++i) {
    p.g_mat.row(static_cast<Eigen::Index>(i)) = g_rows[i];
    p.g_vec(static_cast<Eigen::Index>(i)) = g_vals[i];
  }
  p.e_mat.resize(static_cast<Eigen::Index>(e_rows.size()), 4);
  p.e_vec.setZero(static_cast<Eigen::Index>(e_rows.size()));
  for (size_t i = 0; i < e_rows.size(); ++i) p.e_mat.row(static_cast<Eigen::Index>(i)) = e_rows[i];
}

}  // namespace detail

/// Foot forces reproducing the body reference's rigid-body wrench. Per
/// sample: first the closest achievable wrench under the force limits, then,
/// if that wrench is exact, the smallest forces producing it.
inline FeedforwardResult feedforward_forces(const std::vector<BodyState>& body_ref,
                                            const std::vector<FootGeometry>& feet,
                                            const PhaseSchedule& schedule,
                                            const RobotParams& robot,
                                            const ForceLimits& limits = {}) {
  const int nc = schedule.n_c();
  if (static_cast<int>(body_ref.size()) < nc + 1) {
    throw DimensionError("feedforward_forces: body reference shorter than N_c + 1");
  }
  if (static_cast<int>(feet.size()) != nc) {
    throw DimensionError("feedforward_forces: need one foot geometry per contact sample");
  }
  FeedforwardResult out;
  for (int t = 0; t < nc; ++t) {
    const BodyState& b0 = body_ref[static_cast<size_t>(t)];
    const BodyState& b1 = body_ref[static_cast<size_t>(t) + 1];
    const double dt = schedule.dt;
    const Eigen::Vector3d wrench(robot.trunk_mass * (b1.v_x - b0.v_x) / dt,
                                 robot.trunk_mass * ((b1.v_z - b0.v_z) / dt + robot.gravity),
                                 robot.trunk_inertia * (b1.omega - b0.omega) / dt);
    const auto m = detail::wrench_map(feet[static_cast<size_t>(t)]);
    // Scale rows so force and moment residuals weigh alike.
    const Eigen::Vector3d scale(1.0, 1.0, 1.0 / std::max(0.05, feet[static_cast<size_t>(t)].r_rear.norm()));
    const Eigen::Matrix<double, 3, 4> ms = scale.asDiagonal() * m;
    const Eigen::Vector3d ws = scale.asDiagonal() * wrench;

    qp::QpProblem p;
    p.w = 2.0 * (ms.transpose() * ms + 1e-10 * Mat4::Identity());
    p.h = -2.0 * ms.transpose() * ws;
    detail::force_rows(schedule.front_in_contact(t), schedule.rear_in_contact(t), limits, p);
    auto first = qp::solve(p);
    Vec4 u = first.z;
    double resid = (m * u - wrench).norm();
    if (first.status == qp::QpStatus::kOptimal && resid < 1e-6 * std::max(1.0, wrench.norm())) {
      qp::QpProblem q = p;
      q.w = 2.0 * Mat4::Identity();
      q.h = Vec4::Zero();
      const auto ne = q.e_mat.rows();
      q.e_mat.conservativeResize(ne + 3, 4);
      q.e_vec.conservativeResize(ne + 3);
      q.e_mat.bottomRows(3) = m;
      q.e_vec.tail(3) = wrench;
      auto second = qp::solve(q);
      if (second.status == qp::QpStatus::kOptimal) {
        u = second.z;
        resid = (m * u - wrench).norm();
      }
    }
    out.u.push_back(u);
    out.residual.push_back(resid);
  }
  return out;
}

struct ReferenceSettings {
  ForceLimits limits;
  double reach_min = 0.15;
  double reach_max = 0.385;
  double cone_margin = 0.55;    // planned |f_x| / f_z ceiling, below mu
  double trunk_clearance = 0.02;
  double swing_clearance = 0.05;  // front foot lift during rear-leg contact
  double tuck_fraction = 0.6;     // flight foot sits this fraction of full reach under the hip
  double tuck_margin = 0.03;      // tucked foot height above the landing surface at sample N
  int blend_samples = 10;
  double wrench_tol = 1e-9;
  // Planned per-motor torque and voltage stay below this fraction of the
  // limits, leaving headroom for what the trunk-only model leaves out.
  ActuatorParams actuator;
  double motor_margin = 0.9;
};

/// Shape parameters of the contact phase. Positions are world frame with the
/// standing CoM at x = 0.
struct ReferenceDesign {
  double stand_height = 0.26;
  double takeoff_dx = -0.05;
  double takeoff_rise = 0.0;
  double rear_x = -0.2;
  double front_x = 0.183;
  int pitch_shape = 0;
};

namespace detail {

inline double smoothstep(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * (3.0 - 2.0 * s);
}

struct Plan {
  std::vector<BodyState> body;      // N + 1
  std::vector<FootGeometry> feet;   // N_c
  double peak_pitch = 0.0;
  double peak_cone = 0.0;
  bool ok = false;
  const char* reason = "";
};

// World-frame swing path for the front foot during rear-leg contact.
inline Vec2 front_swing(const ReferenceDesign& d, const ReferenceSettings& rs, int t,
                        const PhaseSchedule& sch) {
  const double span = std::max(1.0, 0.5 * sch.n_sc);
  const double s = smoothstep((t - sch.n_dc) / span);
  return {d.front_x, rs.swing_clearance * s};
}

// Ramp of the all-leg force split correction; zero at the start so the
// stand begins at rest.
inline double pitch_shape(const ReferenceDesign& d, int t, int ndc) {
  const double s = (t + 0.5) / ndc;
  switch (d.pitch_shape) {
    case 0: return s * s;
    case 1: return s;
    case 2: return smoothstep(4.0 * s);
    default: return 4.0 * s * (1.0 - s);
  }
}

// Crouched stands cannot fit the full tuck above the landing surface; the
// foot then stops tuck_margin short of it.
inline double tuck_depth(const RobotParams& robot, const ReferenceSettings& rs,
                         double stand_height) {
  return std::min(rs.tuck_fraction * robot.reach(), stand_height - rs.tuck_margin);
}

inline Vec2 hip_frame(const Vec2& foot_world, const BodyState& b, double hip_x) {
  return rotation(b.theta).transpose() * (foot_world - b.position()) - Vec2(hip_x, 0.0);
}

// Body reference and checks for one design; no force QP involved.
inline Plan plan_design(const ReferenceDesign& d, const Vec2& target, double target_pitch,
                        const RobotParams& robot, const PhaseSchedule& sch,
                        const ReferenceSettings& rs) {
  Plan plan;
  const int ndc = sch.n_dc, nc = sch.n_c();
  const double dt = sch.dt, g = robot.gravity, tf = sch.flight_time();
  const Vec2 stand(0.0, d.stand_height);
  const Vec2 goal = stand + target;
  const Vec2 design_to = stand + Vec2(d.takeoff_dx, d.takeoff_rise);
  const Vec2 v = ballistic_takeoff(goal - design_to, tf, g);
  // Discrete flight drops g dt^2 n(n-1)/2 instead of g T^2 / 2; move the
  // takeoff point so the sampled arc ends exactly on the goal.
  const Vec2 to(goal.x() - tf * v.x(),
                goal.y() - tf * v.y() + 0.5 * g * dt * dt * sch.n_fl * (sch.n_fl - 1));
  const auto px = quintic_profile(stand.x(), 0.0, to.x(), v.x(), nc, dt);
  const auto pz = quintic_profile(stand.y(), 0.0, to.y(), v.y(), nc, dt);

  // Pitch. Each contact sample needs the net force f_t = m (a_t + g). In the
  // rear-leg phase the rear foot carries all of it, which fixes the moment.
  // In the all-leg phase the split lambda_t (front share) is the moment-free
  // split plus c * shape_t; c is solved so the flight ends at target_pitch.
  std::vector<double> kappa(static_cast<size_t>(nc));
  std::vector<double> alpha0(static_cast<size_t>(nc), 0.0);
  std::vector<double> lambda_bal(static_cast<size_t>(ndc));
  for (int t = 0; t < nc; ++t) {
    const auto i = static_cast<size_t>(t);
    const Vec2 f(robot.trunk_mass * px.a[i], robot.trunk_mass * (pz.a[i] + g));
    const Vec2 p(px.p[i], pz.p[i]);
    const Vec2 rf = Vec2(d.front_x, 0.0) - p;
    const Vec2 rr = Vec2(d.rear_x, 0.0) - p;
    if (t < ndc) {
      const double mf = cross2(rf, f), mr = cross2(rr, f);
      if (std::abs(mr - mf) < 1e-9) {
        plan.reason = "degenerate stance";
        return plan;
      }
      lambda_bal[i] = mr / (mr - mf);
      kappa[i] = pitch_shape(d, t, ndc) * (mf - mr) / robot.trunk_inertia;
    } else {
      alpha0[i] = cross2(rr, f) / robot.trunk_inertia;
      if (f.y() < rs.limits.f_min || f.y() > rs.limits.f_max) {
        plan.reason = "rear-leg normal force";
        return plan;
      }
      plan.peak_cone = std::max(plan.peak_cone, std::abs(f.x()) / f.y());
    }
  }
  auto final_pitch = [&](const std::vector<double>& alpha) {
    double th = 0.0, om = 0.0;
    for (double a : alpha) {
      th += dt * om;
      om += dt * a;
    }
    return th + tf * om;
  };
  const double base = final_pitch(alpha0);
  std::vector<double> unit(alpha0);
  for (int t = 0; t < ndc; ++t) unit[static_cast<size_t>(t)] += kappa[static_cast<size_t>(t)];
  const double slope = final_pitch(unit) - base;
  if (std::abs(slope) < 1e-12) {
    plan.reason = "pitch not steerable";
    return plan;
  }
  const double c = (target_pitch - base) / slope;
  std::vector<double> alpha(alpha0);
  for (int t = 0; t < ndc; ++t) {
    const auto i = static_cast<size_t>(t);
    alpha[i] += c * kappa[i];
    const double lambda = lambda_bal[i] + c * pitch_shape(d, t, ndc);
    const double fz = robot.trunk_mass * (pz.a[i] + g);
    const double fx = robot.trunk_mass * px.a[i];
    for (double share : {lambda, 1.0 - lambda}) {
      if (share * fz < rs.limits.f_min || share * fz > rs.limits.f_max) {
        plan.reason = "all-leg normal force";
        return plan;
      }
    }
    plan.peak_cone = std::max(plan.peak_cone, std::abs(fx) / fz);
  }
  std::vector<double> th{0.0}, om{0.0};
  for (double a : alpha) {
    th.push_back(th.back() + dt * om.back());
    om.push_back(om.back() + dt * a);
  }
  for (int t = 0; t <= nc; ++t) {
    const auto i = static_cast<size_t>(t);
    plan.body.push_back({px.p[i], pz.p[i], th[i], px.v[i], pz.v[i], om[i]});
  }
  append_flight(plan.body, sch, g);

  const double hx = robot.hip_x();
  const double half_h = 0.5 * robot.trunk_height;
  for (int t = 0; t <= nc; ++t) {
    const BodyState& b = plan.body[static_cast<size_t>(t)];
    plan.peak_pitch = std::max(plan.peak_pitch, std::abs(b.theta));
    if (b.p_z - half_h - hx * std::abs(std::sin(b.theta)) < rs.trunk_clearance) {
      plan.reason = "trunk clearance";
      return plan;
    }
    const double rr = hip_frame({d.rear_x, 0.0}, b, -hx).norm();
    const Vec2 fw = t <= ndc ? Vec2(d.front_x, 0.0) : front_swing(d, rs, t, sch);
    const double fr = hip_frame(fw, b, hx).norm();
    if (rr < rs.reach_min || rr > rs.reach_max || fr < rs.reach_min || fr > rs.reach_max) {
      plan.reason = "leg reach";
      return plan;
    }
  }
  if (plan.peak_cone > rs.cone_margin) {
    plan.reason = "friction cone";
    return plan;
  }
  for (int t = 0; t < nc; ++t) {
    const BodyState& b = plan.body[static_cast<size_t>(t)];
    plan.feet.push_back({Vec2(d.front_x, 0.0) - b.position(), Vec2(d.rear_x, 0.0) - b.position()});
  }
  plan.ok = true;
  return plan;
}

}  // namespace detail

/// Joint references: stance legs by IK against fixed footholds, the front
/// foot lifting clear during rear-leg contact, both feet blending to the tuck
/// pose in flight. Joint rates use the Jacobian inverse, falling back to
/// central differences of the angles near singular poses.
inline std::vector<LegState> joint_refs(const std::vector<BodyState>& body_ref,
                                        const FootholdPlan& plan, const PhaseSchedule& sch,
                                        const RobotParams& robot,
                                        const ReferenceSettings& rs = {}) {
  const LegGeometry leg = LegGeometry::from(robot);
  const double hx = robot.hip_x();
  const int n = static_cast<int>(body_ref.size()) - 1;
  const int ndc = sch.n_dc, nc = sch.n_c();
  ReferenceDesign d;
  d.front_x = plan.front_x;
  d.rear_x = plan.rear_x;

  // Hip-frame foot path per leg.
  std::vector<Vec2> front(static_cast<size_t>(n + 1)), rear(static_cast<size_t>(n + 1));
  for (int t = 0; t <= n; ++t) {
    const BodyState& b = body_ref[static_cast<size_t>(t)];
    const auto i = static_cast<size_t>(t);
    if (t <= ndc) {
      front[i] = detail::hip_frame({plan.front_x, 0.0}, b, hx);
    } else if (t <= nc) {
      front[i] = detail::hip_frame(detail::front_swing(d, rs, t, sch), b, hx);
    } else {
      const double s = detail::smoothstep(static_cast<double>(t - nc) / rs.blend_samples);
      front[i] = (1.0 - s) * front[static_cast<size_t>(nc)] + s * plan.tuck;
    }
    if (t <= nc) {
      rear[i] = detail::hip_frame({plan.rear_x, 0.0}, b, -hx);
    } else {
      const double s = detail::smoothstep(static_cast<double>(t - nc) / rs.blend_samples);
      rear[i] = (1.0 - s) * rear[static_cast<size_t>(nc)] + s * plan.tuck;
    }
  }

  std::vector<LegState> out(static_cast<size_t>(n + 1));
  auto solve_leg = [&](const std::vector<Vec2>& path, bool is_front, int t) {
    try {
      return leg_ik(path[static_cast<size_t>(t)], leg);
    } catch (const KinematicsError& e) {
      throw KinematicsError(std::string(is_front ? "front" : "rear") + " " + e.what(), t);
    }
  };
  for (int t = 0; t <= n; ++t) {
    out[static_cast<size_t>(t)].front.q = solve_leg(front, true, t);
    out[static_cast<size_t>(t)].rear.q = solve_leg(rear, false, t);
  }

  const double dt = sch.dt;
  for (int t = 0; t <= n; ++t) {
    const auto i = static_cast<size_t>(t);
    const BodyState& b = body_ref[i];
    for (int l = 0; l < 2; ++l) {
      const auto& path = l == 0 ? front : rear;
      LegJoints& j = l == 0 ? out[i].front : out[i].rear;
      Vec2 vel;
      const bool planted = l == 0 ? t <= ndc : t <= nc;
      if (planted) {
        // Foot fixed in the world: hip-frame velocity from the trunk motion.
        const Vec2 hip(l == 0 ? hx : -hx, 0.0);
        const Vec2 r = path[i] + hip;  // foot relative to the CoM, body frame
        vel = -rotation(b.theta).transpose() * b.velocity() - b.omega * Vec2(-r.y(), r.x());
      } else {
        const size_t lo = t > 0 ? i - 1 : i;
        const size_t hi = t < n ? i + 1 : i;
        vel = (path[hi] - path[lo]) / (dt * static_cast<double>(hi - lo));
      }
      const Mat2 jac = leg_jacobian(j.q, leg);
      if (std::abs(jac.determinant()) > 1e-4) {
        j.qdot = jac.inverse() * vel;
      } else {
        const size_t lo = t > 0 ? i - 1 : i;
        const size_t hi = t < n ? i + 1 : i;
        const Vec2 qlo = l == 0 ? out[lo].front.q : out[lo].rear.q;
        const Vec2 qhi = l == 0 ? out[hi].front.q : out[hi].rear.q;
        j.qdot = (qhi - qlo) / (dt * static_cast<double>(hi - lo));
      }
    }
  }
  return out;
}

/// Foot positions relative to the CoM over the contact samples.
inline std::vector<FootGeometry> planned_feet(const std::vector<BodyState>& body_ref,
                                              const FootholdPlan& plan, const PhaseSchedule& sch) {
  std::vector<FootGeometry> feet;
  for (int t = 0; t < sch.n_c(); ++t) {
    const Vec2 p = body_ref[static_cast<size_t>(t)].position();
    feet.push_back({Vec2(plan.front_x, 0.0) - p, Vec2(plan.rear_x, 0.0) - p});
  }
  return feet;
}

/// Peak fraction of the torque or voltage limit the planned forces and joint
/// rates ask of any motor over the contact samples. A planar leg stands for a
/// leg pair, so each motor carries half the lumped torque.
inline double motor_load(const ReferenceBundle& b, const RobotParams& robot,
                         const ActuatorParams& act) {
  const LegGeometry leg = LegGeometry::from(robot);
  double load = 0.0;
  for (int t = 0; t < b.schedule.n_c(); ++t) {
    const auto i = static_cast<size_t>(t);
    const double theta = b.body_ref[i].theta;
    for (int l = 0; l < 2; ++l) {
      const LegJoints& j = l == 0 ? b.joint_ref[i].front : b.joint_ref[i].rear;
      const Vec2 tau = 0.5 * force_to_torque(b.u_init[i].segment<2>(2 * l), j.q, theta, leg);
      for (int k = 0; k < 2; ++k) {
        load = std::max(load, std::abs(tau(k)) / act.tau_max);
        load = std::max(load, std::abs(act.rho * tau(k) + act.sigma * j.qdot(k)) / act.v_bat);
      }
    }
  }
  return load;
}

/// Assemble a bundle for one explicit design. Throws if the feedforward
/// cannot reproduce the reference wrench or
/// the motors would run past the margin.
inline ReferenceBundle build_reference(const ReferenceDesign& d, const Vec2& target,
                                       double target_pitch, const RobotParams& robot,
                                       const PhaseSchedule& sch,
                                       const ReferenceSettings& rs = {}) {
  robot.validate();
  sch.validate();
  auto plan = detail::plan_design(d, target, target_pitch, robot, sch, rs);
  if (!plan.ok) throw ModelInputError("reference design violates reach or force limits");
  ReferenceBundle b;
  b.schedule = sch;
  b.footholds = {d.front_x, d.rear_x, d.stand_height,
                 Vec2(0.0, -detail::tuck_depth(robot, rs, d.stand_height))};
  b.body_ref = std::move(plan.body);
  auto ff = feedforward_forces(b.body_ref, plan.feet, sch, robot, rs.limits);
  for (size_t t = 0; t < ff.residual.size(); ++t) {
    if (ff.residual[t] > rs.wrench_tol * 1e3) {
      std::ostringstream os;
      os << "feedforward wrench residual " << ff.residual[t];
      throw InfeasibleForceError(os.str(), static_cast<int>(t));
    }
  }
  b.u_init = std::move(ff.u);
  b.joint_ref = joint_refs(b.body_ref, b.footholds, sch, robot, rs);
  const double load = motor_load(b, robot, rs.actuator);
  if (load > rs.motor_margin) {
    std::ostringstream os;
    os << "planned motor load " << load << " exceeds " << rs.motor_margin;
    throw InfeasibleForceError(os.str(), -1);
  }
  return b;
}

/// Designs on the search grid that pass the reach, clearance and force
/// checks, smallest peak pitch first.
inline std::vector<ReferenceDesign> reference_candidates(const Vec2& target, double target_pitch,
                                                         const RobotParams& robot,
                                                         const PhaseSchedule& sch,
                                                         const ReferenceSettings& rs = {}) {
  struct Candidate {
    double score;
    ReferenceDesign d;
  };
  std::vector<Candidate> found;
  for (int shape = 0; shape < 2; ++shape) {
    for (int ih = 0; ih < 12; ++ih) {
      for (int ix = 0; ix < 11; ++ix) {
        for (int iz = 0; iz < 13; ++iz) {
          for (int ir = 0; ir < 36; ++ir) {
            for (double fx : {0.10, 0.183, 0.25}) {
              const ReferenceDesign d{0.14 + 0.02 * ih, -0.10 + 0.03 * ix, 0.02 * iz,
                                      -0.25 + 0.01 * ir, fx, shape};
              auto plan = detail::plan_design(d, target, target_pitch, robot, sch, rs);
              if (plan.ok) found.push_back({plan.peak_pitch + 0.05 * plan.peak_cone, d});
            }
          }
        }
      }
    }
  }
  std::stable_sort(found.begin(), found.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score < b.score; });
  std::vector<ReferenceDesign> out;
  out.reserve(found.size());
  for (const auto& c : found) out.push_back(c.d);
  return out;
}

/// Build the first candidate that also passes the feedforward and motor
/// checks.
inline ReferenceBundle make_reference_bundle(const Vec2& target, double target_pitch,
                                             const RobotParams& robot, const PhaseSchedule& sch,
                                             const ReferenceSettings& rs = {}) {
  for (const auto& d : reference_candidates(target, target_pitch, robot, sch, rs)) {
    try {
      return build_reference(d, target, target_pitch, robot, sch, rs);
    } catch (const InfeasibleForceError&) {
    } catch (const KinematicsError&) {
    }
  }
  throw ModelInputError("no feasible reference design for this target");
}

/// The same references aimed at a new target: only the final sample moves,
/// to the new ballistic endpoint.
inline ReferenceBundle retarget(ReferenceBundle b, const Vec2& target, double target_pitch,
                                double gravity = 9.81) {
  const PhaseSchedule& sch = b.schedule;
  const Vec2 goal = Vec2(0.0, b.footholds.stand_height) + target;
  const BodyState& to = b.body_ref[static_cast<size_t>(sch.n_c())];
  const Vec2 v = ballistic_takeoff(goal - to.position(), sch.flight_time(), gravity);
  BodyState& last = b.body_ref.back();
  last.p_x = goal.x();
  last.p_z = goal.y();
  last.theta = target_pitch;
  last.v_x = v.x();
  last.v_z = v.y() - gravity * sch.flight_time();
  return b;
}

}  // namespace ilcjump
