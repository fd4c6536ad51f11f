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


// Affine constraints on the force offset du for one learning update.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <string>
#include <vector>

#include "ilcjump/ilc/lifted.hpp"
#include "ilcjump/model/kinematics.hpp"
#include "ilcjump/plant/trial.hpp"

namespace ilcjump::ilc {

struct ForceBounds {
  double f_min = 5.0;
  double f_max = 250.0;
  double mu = 0.6;

  void validate() const {
    if (!(f_min > 0.0) || !(f_max > f_min) || !(mu > 0.0)) {
      throw ModelInputError("force bounds need 0 < f_min < f_max and mu > 0");
    }
  }
};

/// g_mat du <= g_vec and e_mat du = e_vec.
struct ConstraintSet {
  MatrixXd g_mat;
  VectorXd g_vec;
  MatrixXd e_mat;
  VectorXd e_vec;
  int dropped_mdc_rows = 0;

  /// Largest violation by du (zero when feasible).
  double violation(const VectorXd& du) const {
    double v = 0.0;
    if (g_vec.size() > 0) v = std::max(v, (g_mat * du - g_vec).maxCoeff());
    if (e_vec.size() > 0) v = std::max(v, (e_mat * du - e_vec).cwiseAbs().maxCoeff());
    return v;
  }
};

namespace detail {

class RowBuilder {
 public:
  explicit RowBuilder(Eigen::Index n) : n_(n) {}

  /// a . du_t <= b with a acting on the 4 entries of sample t.
  void le(int t, const Vec4& a, double b) {
    ineq_a_.push_back({t, a});
    ineq_b_.push_back(b);
  }
  void eq(int col, double b) {
    eq_col_.push_back(col);
    eq_b_.push_back(b);
  }

  ConstraintSet finish() const {
    ConstraintSet cs;
    const auto mi = static_cast<Eigen::Index>(ineq_b_.size());
    const auto me = static_cast<Eigen::Index>(eq_b_.size());
    cs.g_mat = MatrixXd::Zero(mi, n_);
    cs.g_vec.resize(mi);
    for (Eigen::Index i = 0; i < mi; ++i) {
      const auto& [t, a] = ineq_a_[static_cast<size_t>(i)];
      cs.g_mat.block<1, 4>(i, 4 * t) = a.transpose();
      cs.g_vec(i) = ineq_b_[static_cast<size_t>(i)];
    }
    cs.e_mat = MatrixXd::Zero(me, n_);
    cs.e_vec.resize(me);
    for (Eigen::Index i = 0; i < me; ++i) {
      cs.e_mat(i, eq_col_[static_cast<size_t>(i)]) = 1.0;
      cs.e_vec(i) = eq_b_[static_cast<size_t>(i)];
    }
    return cs;
  }

 private:
  Eigen::Index n_;
  std::vector<std::pair<int, Vec4>> ineq_a_;
  std::vector<double> ineq_b_;
  std::vector<int> eq_col_;
  std::vector<double> eq_b_;
};

}  // namespace detail

/// Constraints for u_{k+1} = u + du around trial k. Torques are per motor:
/// each planar leg stands for a leg pair, so a motor carries half of the
/// lumped torque. Joint velocities for the voltage bound come from the trial.
inline ConstraintSet assemble_constraints(const TrialRecord& trial, const ControlSequence& u,
                                          const ActuatorParams& act, const ForceBounds& fb,
                                          const PhaseSchedule& sch, const RobotParams& robot) {
  act.validate();
  fb.validate();
  const int nc = sch.n_c();
  if (static_cast<int>(u.size()) != nc) {
    throw DimensionError("assemble_constraints: u must have N_c samples");
  }
  if (static_cast<int>(trial.joints.size()) < nc || static_cast<int>(trial.body.size()) < nc) {
    throw DimensionError("assemble_constraints: trial log shorter than the contact phase");
  }
  const LegGeometry leg = LegGeometry::from(robot);
  detail::RowBuilder rb(4 * nc);
  int dropped = 0;
  for (int t = 0; t < nc; ++t) {
    const Vec4& ut = u[static_cast<size_t>(t)];
    const auto& js = trial.joints[static_cast<size_t>(t)];
    const double theta = trial.body[static_cast<size_t>(t)].theta;
    for (int l = 0; l < 2; ++l) {
      const int o = 2 * l;
      const bool stance = l == 0 ? sch.front_in_contact(t) : sch.rear_in_contact(t);
      if (!stance) {
        rb.eq(4 * t + o, -ut(o));
        rb.eq(4 * t + o + 1, -ut(o + 1));
        continue;
      }
      const double fx = ut(o), fz = ut(o + 1);
      Vec4 a = Vec4::Zero();
      a(o + 1) = -1.0;
      rb.le(t, a, fz - fb.f_min);
      a(o + 1) = 1.0;
      rb.le(t, a, fb.f_max - fz);
      a(o) = 1.0;
      a(o + 1) = -fb.mu;
      rb.le(t, a, fb.mu * fz - fx);
      a(o) = -1.0;
      rb.le(t, a, fb.mu * fz + fx);

      const LegJoints& jl = l == 0 ? js.front : js.rear;
      const Mat2 tm = 0.5 * force_to_torque_matrix(jl.q, theta, leg);
      const Vec2 tau = tm * ut.segment<2>(o);
      for (int j = 0; j < 2; ++j) {
        const double mdc_lo = (-act.v_bat - act.sigma * jl.qdot(j)) / act.rho;
        const double mdc_hi = (act.v_bat - act.sigma * jl.qdot(j)) / act.rho;
        double lo = std::max(-act.tau_max, mdc_lo);
        double hi = std::min(act.tau_max, mdc_hi);
        if (lo > hi) {
          // No torque satisfies both; keep saturation only.
          ++dropped;
          lo = -act.tau_max;
          hi = act.tau_max;
        }
        Vec4 row = Vec4::Zero();
        row.segment<2>(o) = tm.row(j).transpose();
        rb.le(t, row, hi - tau(j));
        rb.le(t, -row, tau(j) - lo);
      }
    }
  }
  ConstraintSet cs = rb.finish();
  cs.dropped_mdc_rows = dropped;
  return cs;
}

}  // namespace ilcjump::ilc
