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


// Planar articulated robot: trunk (x, z, theta) plus two 2-link legs.
// Generalized coordinates s = [x, z, theta, qf1, qf2, qr1, qr2] with (x, z)
// the trunk CoM. Every body point is written as
//   p = (x, z) + sum_j c_j e(phi_j + alpha_j),  e(a) = (cos a, sin a),
// where phi_j are absolute link angles, linear in s. Mass matrix and bias
// terms follow from that form directly.

#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "ilcjump/model/types.hpp"
#include "ilcjump/plant/task.hpp"

namespace ilcjump {

using Vec7 = Eigen::Matrix<double, 7, 1>;
using Mat7 = Eigen::Matrix<double, 7, 7>;
using Mat27 = Eigen::Matrix<double, 2, 7>;

enum Leg { kFront = 0, kRear = 1 };

class ArticulatedPlant {
 public:
  static constexpr int kDof = 7;

  ArticulatedPlant(const RobotParams& robot, const Payload& payload, bool leg_mass_pairs)
      : gravity_(robot.gravity) {
    // Absolute angles: trunk, front thigh, front calf, rear thigh, rear calf.
    angle_map_.setZero();
    angle_map_(0, 2) = 1;
    angle_map_(1, 2) = angle_map_(1, 3) = 1;
    angle_map_(2, 2) = angle_map_(2, 3) = angle_map_(2, 4) = 1;
    angle_map_(3, 2) = angle_map_(3, 5) = 1;
    angle_map_(4, 2) = angle_map_(4, 5) = angle_map_(4, 6) = 1;

    const double hx = robot.hip_x();
    const double l1 = robot.thigh_length;
    const double l2 = robot.calf_length;
    const double k = leg_mass_pairs ? 2.0 : 1.0;
    const double mt = k * robot.thigh_mass;
    const double mc = k * robot.calf_mass;

    bodies_.push_back({robot.trunk_mass, robot.trunk_inertia, 0, {}});
    if (payload.mass > 0.0) {
      bodies_.push_back({payload.mass, 0.0, 0,
                         {{{0, payload.offset.norm(),
                            std::atan2(payload.offset.y(), payload.offset.x())}}}});
    }
    for (int leg = 0; leg < 2; ++leg) {
      const double sx = leg == kFront ? hx : -hx;
      const int th = 1 + 2 * leg;
      const int ca = th + 1;
      bodies_.push_back({mt, mt * l1 * l1 / 12.0, th, {{{0, sx, 0}, {th, 0.5 * l1, 0}}}});
      bodies_.push_back(
          {mc, mc * l2 * l2 / 12.0, ca, {{{0, sx, 0}, {th, l1, 0}, {ca, 0.5 * l2, 0}}}});
      feet_[leg] = {{{0, sx, 0}, {th, l1, 0}, {ca, l2, 0}}};
    }
    const double a = 0.5 * robot.body_length;
    const double b = 0.5 * robot.trunk_height;
    for (int i = 0; i < 4; ++i) {
      const Vec2 c((i & 1) ? a : -a, (i & 2) ? b : -b);
      corners_[static_cast<size_t>(i)] = {{{0, c.norm(), std::atan2(c.y(), c.x())}}};
    }
    for (const auto& body : bodies_) total_mass_ += body.mass;
  }

  double total_mass() const { return total_mass_; }

  Vec2 foot(const Vec7& s, Leg leg) const { return point(s, feet_[leg]); }
  Vec2 foot_velocity(const Vec7& s, const Vec7& sd, Leg leg) const {
    return jacobian(s, feet_[leg]) * sd;
  }
  Mat27 foot_jacobian(const Vec7& s, Leg leg) const { return jacobian(s, feet_[leg]); }
  Vec2 corner(const Vec7& s, int i) const {
    return point(s, corners_[static_cast<size_t>(i)]);
  }

  /// Generalized accelerations for lumped joint torques `tau` (qf1, qf2,
  /// qr1, qr2) and world-frame foot forces.
  Vec7 accel(const Vec7& s, const Vec7& sd, const Vec4& tau, const Vec2& f_front,
             const Vec2& f_rear) const {
    const Eigen::Matrix<double, 5, 1> phi = angle_map_ * s;
    const Eigen::Matrix<double, 5, 1> phid = angle_map_ * sd;
    Mat7 h = Mat7::Zero();
    Vec7 q = Vec7::Zero();
    q.tail<4>() = tau;
    const Vec2 g(0.0, -gravity_);
    for (const auto& body : bodies_) {
      Mat27 j;
      Vec2 bias;
      terms_jacobian(phi, phid, body.terms, j, bias);
      h.noalias() += body.mass * j.transpose() * j;
      q.noalias() += body.mass * j.transpose() * (g - bias);
      if (body.inertia > 0.0) {
        const auto row = angle_map_.row(body.angle);
        h.noalias() += body.inertia * row.transpose() * row;
      }
    }
    q.noalias() += jacobian(s, feet_[kFront]).transpose() * f_front;
    q.noalias() += jacobian(s, feet_[kRear]).transpose() * f_rear;
    return h.ldlt().solve(q);
  }

  Mat7 mass_matrix(const Vec7& s) const {
    const Eigen::Matrix<double, 5, 1> phi = angle_map_ * s;
    Mat7 h = Mat7::Zero();
    for (const auto& body : bodies_) {
      Mat27 j;
      Vec2 bias;
      terms_jacobian(phi, Eigen::Matrix<double, 5, 1>::Zero(), body.terms, j, bias);
      h += body.mass * j.transpose() * j;
      const auto row = angle_map_.row(body.angle);
      h += body.inertia * row.transpose() * row;
    }
    return h;
  }

  double energy(const Vec7& s, const Vec7& sd) const {
    double pe = 0.0;
    for (const auto& body : bodies_) pe += body.mass * gravity_ * point(s, body.terms).y();
    return 0.5 * sd.dot(mass_matrix(s) * sd) + pe;
  }

  /// Whole-robot CoM and its velocity.
  Vec2 com(const Vec7& s) const {
    Vec2 c = Vec2::Zero();
    for (const auto& body : bodies_) c += body.mass * point(s, body.terms);
    return c / total_mass_;
  }
  Vec2 com_velocity(const Vec7& s, const Vec7& sd) const {
    Vec2 v = Vec2::Zero();
    for (const auto& body : bodies_) v += body.mass * (jacobian(s, body.terms) * sd);
    return v / total_mass_;
  }

  /// Angular momentum about the whole-robot CoM, positive nose-up.
  double angular_momentum(const Vec7& s, const Vec7& sd) const {
    const Vec2 c = com(s);
    const Vec2 cd = com_velocity(s, sd);
    const Eigen::Matrix<double, 5, 1> phid = angle_map_ * sd;
    double l = 0.0;
    for (const auto& body : bodies_) {
      const Vec2 r = point(s, body.terms) - c;
      const Vec2 v = jacobian(s, body.terms) * sd - cd;
      l += body.mass * (r.x() * v.y() - r.y() * v.x()) + body.inertia * phid(body.angle);
    }
    return l;
  }

 private:
  struct Term {
    int angle = 0;
    double c = 0.0;
    double alpha = 0.0;
  };
  using Terms = std::vector<Term>;
  struct Body {
    double mass;
    double inertia;
    int angle;
    Terms terms;
  };

  Vec2 point(const Vec7& s, const Terms& terms) const {
    const Eigen::Matrix<double, 5, 1> phi = angle_map_ * s;
    Vec2 p(s(0), s(1));
    for (const auto& t : terms) {
      const double a = phi(t.angle) + t.alpha;
      p += t.c * Vec2(std::cos(a), std::sin(a));
    }
    return p;
  }

  Mat27 jacobian(const Vec7& s, const Terms& terms) const {
    Mat27 j;
    Vec2 bias;
    terms_jacobian(angle_map_ * s, Eigen::Matrix<double, 5, 1>::Zero(), terms, j, bias);
    return j;
  }

  void terms_jacobian(const Eigen::Matrix<double, 5, 1>& phi,
                      const Eigen::Matrix<double, 5, 1>& phid, const Terms& terms,
                      Mat27& j, Vec2& bias) const {
    j.setZero();
    j(0, 0) = 1.0;
    j(1, 1) = 1.0;
    bias.setZero();
    for (const auto& t : terms) {
      const double a = phi(t.angle) + t.alpha;
      const double ca = std::cos(a);
      const double sa = std::sin(a);
      j.row(0) += -t.c * sa * angle_map_.row(t.angle);
      j.row(1) += t.c * ca * angle_map_.row(t.angle);
      const double w2 = phid(t.angle) * phid(t.angle);
      bias += -t.c * w2 * Vec2(ca, sa);
    }
  }

  double gravity_;
  double total_mass_ = 0.0;
  Eigen::Matrix<double, 5, 7> angle_map_;
  std::vector<Body> bodies_;
  std::array<Terms, 2> feet_;
  std::array<Terms, 4> corners_;
};

}  // namespace ilcjump
