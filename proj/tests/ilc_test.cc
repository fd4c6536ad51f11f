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


// Lifted error model, update constraints, the stage-scheduled QP step and
// the learning loops.

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ilcjump/ilc/learner.hpp"

namespace ilcjump::ilc {
namespace {

std::vector<FootGeometry> RandomFeet(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> x(-0.25, 0.25), z(-0.3, -0.15);
  std::vector<FootGeometry> feet;
  for (int t = 0; t < n; ++t) feet.push_back({{x(rng), z(rng)}, {x(rng), z(rng)}});
  return feet;
}

ControlSequence RandomForces(int n, std::mt19937& rng, double scale) {
  std::uniform_real_distribution<double> f(-scale, scale);
  ControlSequence u(static_cast<size_t>(n));
  for (auto& s : u) s = Vec4(f(rng), f(rng), f(rng), f(rng));
  return u;
}

TEST(LiftedTest, PredictionMatchesRollout) {
  std::mt19937 rng(11);
  const PhaseSchedule sch;
  const RobotParams robot;
  for (int trial = 0; trial < 5; ++trial) {
    const auto model = discretize(RandomFeet(sch.n_c(), rng), sch, robot);
    const auto lm = build_lifted(model, sch);
    const ControlSequence u = RandomForces(sch.n_c(), rng, 80.0);
    const ControlSequence du = RandomForces(sch.n_c(), rng, 10.0);
    ControlSequence u2 = u;
    for (size_t t = 0; t < u.size(); ++t) u2[t] += du[t];
    const Vec6 x0 = (Vec6() << 0.0, 0.2, 0.05, 0.0, 0.0, 0.0).finished();
    const auto x1 = rollout(model, x0, u, sch.n());
    const auto x2 = rollout(model, x0, u2, sch.n());
    std::vector<Vec6> ref(static_cast<size_t>(sch.n()) + 1, Vec6::Constant(0.3));
    std::vector<Vec6> e1, e2;
    for (size_t t = 0; t < x1.size(); ++t) {
      e1.push_back(ref[t] - x1[t]);
      e2.push_back(ref[t] - x2[t]);
    }
    const auto pred = predict_error(e1, lm, stack_inputs(du));
    for (size_t t = 0; t < e2.size(); ++t) {
      EXPECT_NEAR((pred[t] - e2[t]).norm(), 0.0, 1e-10) << "sample " << t;
    }
  }
}

TEST(LiftedTest, FlightRowsPropagate) {
  std::mt19937 rng(5);
  const PhaseSchedule sch;
  const auto model = discretize(RandomFeet(sch.n_c(), rng), sch, RobotParams{});
  const auto lm = build_lifted(model, sch);
  Mat6 a = Mat6::Identity();
  const MatrixXd at_nc = lm.row(sch.n_c());
  for (int m = sch.n_c() + 1; m <= sch.n(); ++m) {
    a = model.a_mat * a;
    const MatrixXd expect = a * at_nc;
    EXPECT_NEAR((lm.row(m) - expect).norm(), 0.0, 1e-10 * std::max(1.0, expect.norm()));
  }
  const auto frozen = build_lifted(model, sch, FlightErrorModel::kFrozen);
  for (int m = sch.n_c() + 1; m <= sch.n(); ++m) {
    EXPECT_EQ(frozen.row(m), frozen.row(sch.n_c()));
  }
  for (int m = 1; m <= sch.n_c(); ++m) EXPECT_EQ(frozen.row(m), lm.row(m));
}

TEST(LiftedTest, ThreeSampleHandExpansion) {
  PhaseSchedule sch{1, 1, 1, 0.01};
  std::mt19937 rng(3);
  const auto model = discretize(RandomFeet(2, rng), sch, RobotParams{});
  const auto lm = build_lifted(model, sch);
  const Mat6& a = model.a_mat;
  const Mat64& b0 = model.b_mats[0];
  const Mat64& b1 = model.b_mats[1];
  ASSERT_EQ(lm.g.rows(), 18);
  ASSERT_EQ(lm.g.cols(), 8);
  EXPECT_EQ(MatrixXd(lm.block(1, 0)), MatrixXd(b0));
  EXPECT_EQ(MatrixXd(lm.block(1, 1)), MatrixXd::Zero(6, 4));
  EXPECT_NEAR((lm.block(2, 0) - a * b0).norm(), 0.0, 1e-15);
  EXPECT_EQ(MatrixXd(lm.block(2, 1)), MatrixXd(b1));
  EXPECT_NEAR((lm.block(3, 0) - a * a * b0).norm(), 0.0, 1e-15);
  EXPECT_NEAR((lm.block(3, 1) - a * b1).norm(), 0.0, 1e-15);
}

TEST(LiftedTest, DoublingToy) {
  PhaseSchedule sch{2, 1, 2, 0.01};
  DiscreteModel model;
  model.a_mat = 2.0 * Mat6::Identity();
  for (int j = 0; j < sch.n_c(); ++j) {
    Mat64 b = Mat64::Zero();
    b.topRows<4>() = (j + 1.0) * Mat4::Identity();
    model.b_mats.push_back(b);
  }
  const auto lm = build_lifted(model, sch);
  for (int m = 1; m <= sch.n(); ++m) {
    for (int j = 0; j < sch.n_c(); ++j) {
      const MatrixXd blk = lm.block(m, j);
      const double expect = j < m ? std::pow(2.0, m - 1 - j) * (j + 1.0) : 0.0;
      EXPECT_DOUBLE_EQ(blk(0, 0), expect) << m << "," << j;
      EXPECT_DOUBLE_EQ(blk(5, 3), 0.0);
    }
  }
}

TEST(LiftedTest, StackingAndDimensions) {
  std::mt19937 rng(1);
  const auto u = RandomForces(7, rng, 5.0);
  EXPECT_EQ(unstack_inputs(stack_inputs(u)), u);
  EXPECT_THROW(unstack_inputs(VectorXd::Zero(5)), DimensionError);
  const PhaseSchedule sch;
  DiscreteModel model;
  model.b_mats.resize(3);
  EXPECT_THROW(build_lifted(model, sch), DimensionError);
  const auto good = build_lifted(discretize(RandomFeet(sch.n_c(), rng), sch, RobotParams{}), sch);
  std::vector<Vec6> e(static_cast<size_t>(sch.n()) + 1, Vec6::Zero());
  EXPECT_THROW(predict_error(e, good, VectorXd::Zero(3)), DimensionError);
  e.pop_back();
  EXPECT_THROW(predict_error(e, good, VectorXd::Zero(good.g.cols())), DimensionError);
  EXPECT_THROW(parse_flight_model("sideways"), ModelInputError);
  EXPECT_EQ(parse_flight_model("frozen"), FlightErrorModel::kFrozen);
}

TEST(UpdateTest, ScalarRidge) {
  const double b = 0.7, e = 0.3, q = 2.0, r = 0.05;
  const PhaseSchedule sch{1, 1, 1, 0.01};
  LiftedModel lm;
  lm.n = sch.n();
  lm.n_c = sch.n_c();
  lm.g = MatrixXd::Zero(6 * lm.n, 4 * lm.n_c);
  lm.g(6 * (lm.n - 1), 0) = b;
  IlcWeights w;
  w.q_e = Vec6::Zero();
  w.q_e(0) = q;
  w.q_u = Vec4::Constant(r);
  std::vector<Vec6> ek(static_cast<size_t>(lm.n) + 1, Vec6::Zero());
  ek.back()(0) = e;
  ConstraintSet none;
  none.g_mat = MatrixXd::Zero(0, lm.g.cols());
  none.e_mat = MatrixXd::Zero(0, lm.g.cols());
  const ControlSequence u(static_cast<size_t>(lm.n_c), Vec4::Zero());
  const auto up = ilc_step(ek, u, lm, w, 3, sch, none);
  ASSERT_EQ(up.status, qp::QpStatus::kOptimal);
  EXPECT_NEAR(up.du[0](0), q * b * e / (q * b * b + r), 1e-6);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(up.du[0](i), 0.0, 1e-9);
  EXPECT_NEAR(up.du[1].norm(), 0.0, 1e-9);
}

TEST(UpdateTest, StageWindows) {
  const PhaseSchedule sch;
  EXPECT_EQ(stage_window(0, sch).front(), 1);
  EXPECT_EQ(stage_window(0, sch).back(), sch.n());
  EXPECT_EQ(stage_window(1, sch).back(), sch.n_c());
  EXPECT_EQ(stage_window(2, sch).front(), sch.n_dc);
  EXPECT_EQ(stage_window(2, sch).back(), sch.n());
  EXPECT_EQ(stage_window(3, sch), std::vector<int>{sch.n()});
  EXPECT_THROW(stage_window(4, sch), ModelInputError);
  const StageSchedule ss;
  EXPECT_EQ(ss.stage_of(0), 1);
  EXPECT_EQ(ss.stage_of(4), 1);
  EXPECT_EQ(ss.stage_of(5), 2);
  EXPECT_EQ(ss.stage_of(9), 2);
  EXPECT_EQ(ss.stage_of(10), 3);
  EXPECT_EQ(ss.stage_of(40), 3);
}

// One real trial shared by the update and constraint tests.
class TrialFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    task_ = new JumpTask();
    refs_ = new ReferenceBundle(
        make_reference_bundle(task_->target, 0.0, task_->robot, task_->schedule));
    rec_ = new TrialRecord(run_trial(refs_->u_init, *refs_, *task_));
  }
  static void TearDownTestSuite() {
    delete rec_;
    delete refs_;
    delete task_;
  }
  static LiftedModel Lifted() {
    return build_lifted(model_from_trial(*rec_, task_->schedule, task_->robot), task_->schedule);
  }
  static ConstraintSet Constraints() {
    return assemble_constraints(*rec_, refs_->u_init, task_->actuator, ForceBounds{},
                                task_->schedule, task_->robot);
  }
  static JumpTask* task_;
  static ReferenceBundle* refs_;
  static TrialRecord* rec_;
};
JumpTask* TrialFixture::task_ = nullptr;
ReferenceBundle* TrialFixture::refs_ = nullptr;
TrialRecord* TrialFixture::rec_ = nullptr;

TEST_F(TrialFixture, GoalStageIgnoresIntermediateErrors) {
  const auto lm = Lifted();
  const auto cs = Constraints();
  const auto a = ilc_step(rec_->errors, refs_->u_init, lm, IlcWeights{}, 3, task_->schedule, cs);
  std::vector<Vec6> scrambled = rec_->errors;
  for (size_t t = 1; t + 1 < scrambled.size(); ++t) scrambled[t] *= -3.0;
  const auto b = ilc_step(scrambled, refs_->u_init, lm, IlcWeights{}, 3, task_->schedule, cs);
  ASSERT_EQ(a.status, qp::QpStatus::kOptimal);
  ASSERT_EQ(b.status, qp::QpStatus::kOptimal);
  EXPECT_NEAR((stack_inputs(a.du) - stack_inputs(b.du)).norm(), 0.0, 1e-6);
  EXPECT_NEAR(a.current_cost, windowed_cost(rec_->errors, IlcWeights{}, {task_->schedule.n()}),
              1e-12);
}

TEST_F(TrialFixture, PredictedCostNeverRises) {
  const auto lm = Lifted();
  const auto cs = Constraints();
  for (int stage = 0; stage <= 3; ++stage) {
    const auto up = ilc_step(rec_->errors, refs_->u_init, lm, IlcWeights{}, stage,
                             task_->schedule, cs);
    ASSERT_EQ(up.status, qp::QpStatus::kOptimal) << "stage " << stage;
    EXPECT_LE(up.objective, 1e-9);
    EXPECT_LE(up.predicted_cost, up.current_cost + 1e-9) << "stage " << stage;
    EXPECT_LE(cs.violation(stack_inputs(up.du)), 1e-6);
    EXPECT_LT(up.qp_seconds, 1.0);
  }
}

TEST_F(TrialFixture, RowCountsAndSwingEqualities) {
  const PhaseSchedule& sch = task_->schedule;
  const auto cs = Constraints();
  EXPECT_EQ(cs.g_mat.cols(), 4 * sch.n_c());
  EXPECT_EQ(cs.g_mat.rows(), 16 * sch.n_dc + 8 * sch.n_sc);
  EXPECT_EQ(cs.e_mat.rows(), 2 * sch.n_sc);
  // The first trial's own forces are feasible: du = 0 satisfies every row.
  EXPECT_LE(cs.violation(VectorXd::Zero(cs.g_mat.cols())), 1e-9);
  // A swing foot's equality rows cancel its force.
  const VectorXd z = stack_inputs(refs_->u_init);
  EXPECT_NEAR((cs.e_mat * z + cs.e_vec).norm(), 0.0, 1e-9);
}

// Constraint rows for a single all-leg sample at a fixed pose.
ConstraintSet OneSample(double qdot, const Vec4& u, Vec2 q = Vec2(-0.9, 1.6)) {
  PhaseSchedule sch{1, 1, 1, 0.01};
  TrialRecord rec;
  LegState js;
  js.front = {q, Vec2::Constant(qdot)};
  js.rear = js.front;
  rec.joints.assign(3, js);
  rec.body.assign(3, BodyState{});
  return assemble_constraints(rec, ControlSequence{u, Vec4(0, 0, 0, 40)}, ActuatorParams{},
                              ForceBounds{}, sch, RobotParams{});
}

// Finds the row equal to `row` on the front foot of sample 0 and returns its
// right-hand side.
double RhsOf(const ConstraintSet& cs, const Vec2& row) {
  for (Eigen::Index i = 0; i < cs.g_mat.rows(); ++i) {
    const Eigen::RowVectorXd r = cs.g_mat.row(i);
    if ((r.segment<2>(0).transpose() - row).norm() < 1e-12 && r.tail(r.size() - 2).norm() == 0.0) {
      return cs.g_vec(i);
    }
  }
  ADD_FAILURE() << "row not found";
  return 0.0;
}

TEST(ConstraintTest, TorqueBoundsAtRest) {
  const Vec2 q(-0.9, 1.6);
  const Vec4 u(10.0, 60.0, 0.0, 60.0);
  const auto cs = OneSample(0.0, u, q);
  // Per-motor torque map, built from the Jacobian independently.
  const double l = 0.2;
  Mat2 jac;
  jac << -l * std::sin(q(0)) - l * std::sin(q(0) + q(1)), -l * std::sin(q(0) + q(1)),
      l * std::cos(q(0)) + l * std::cos(q(0) + q(1)), l * std::cos(q(0) + q(1));
  const Mat2 tm = -0.5 * jac.transpose();
  const Vec2 tau = tm * u.head<2>();
  for (int j = 0; j < 2; ++j) {
    EXPECT_NEAR(RhsOf(cs, tm.row(j)), 33.5 - tau(j), 1e-9);
    EXPECT_NEAR(RhsOf(cs, -tm.row(j)), tau(j) + 33.5, 1e-9);
  }
  EXPECT_EQ(cs.dropped_mdc_rows, 0);
}

TEST(ConstraintTest, BackEmfTightensOneSide) {
  const ActuatorParams act;
  const Vec2 q(-0.9, 1.6);
  const Vec4 u(0.0, 60.0, 0.0, 60.0);
  const double qd = 10.0;
  const auto cs = OneSample(qd, u, q);
  const Mat2 tm = 0.5 * force_to_torque_matrix(q, 0.0, LegGeometry{});
  const Vec2 tau = tm * u.head<2>();
  const double hi = (act.v_bat - act.sigma * qd) / act.rho;
  ASSERT_LT(hi, act.tau_max);
  for (int j = 0; j < 2; ++j) {
    EXPECT_NEAR(RhsOf(cs, tm.row(j)), hi - tau(j), 1e-9);
    EXPECT_NEAR(RhsOf(cs, -tm.row(j)), tau(j) + act.tau_max, 1e-9);
  }
}

TEST(ConstraintTest, EmptyVoltageIntervalFallsBackToSaturation) {
  const auto cs = OneSample(50.0, Vec4(0.0, 60.0, 0.0, 60.0));
  // Both joints of both stance legs at sample 0 plus the rear leg at sample 1.
  EXPECT_EQ(cs.dropped_mdc_rows, 6);
}

TEST(ConstraintTest, FlightHasNoRows) {
  const auto cs = OneSample(0.0, Vec4(0.0, 60.0, 0.0, 60.0));
  // Two samples of input: sample 0 all-leg, sample 1 rear-leg. Nothing else.
  EXPECT_EQ(cs.g_mat.cols(), 8);
  EXPECT_EQ(cs.g_mat.rows(), 16 + 8);
  EXPECT_EQ(cs.e_mat.rows(), 2);
}

TEST(PdIlcTest, Recursion) {
  const PhaseSchedule sch{1, 1, 1, 0.01};
  ReferenceBundle refs;
  refs.joint_ref.resize(4);
  TrialRecord rec;
  rec.joints.resize(4);
  for (int t = 0; t < 4; ++t) {
    refs.joint_ref[static_cast<size_t>(t)].front = {Vec2(0.1 * t, -0.2), Vec2(0.5, 0.0)};
    refs.joint_ref[static_cast<size_t>(t)].rear = {Vec2(0.0, 0.3), Vec2(0.0, 0.0)};
    rec.joints[static_cast<size_t>(t)].front = {Vec2(0.08 * t, -0.2), Vec2(0.3, 0.0)};
    rec.joints[static_cast<size_t>(t)].rear = {Vec2(0.0, 0.3), Vec2(0.0, 2.0)};
  }
  const std::vector<Vec4> tau(3, Vec4(1.0, 0.0, 0.0, 40.0));
  const PdIlcGains g;
  const auto next = pd_type_ilc_step(rec, refs, tau, g, ActuatorParams{});
  ASSERT_EQ(next.size(), 3u);
  for (int t = 0; t < 3; ++t) {
    const double eq = 0.02 * (t + 1);
    EXPECT_NEAR(next[static_cast<size_t>(t)](0), 1.0 + g.l_p * eq + g.l_d * 0.2, 1e-12);
    EXPECT_NEAR(next[static_cast<size_t>(t)](1), 0.0, 1e-12);
    EXPECT_NEAR(next[static_cast<size_t>(t)](2), 0.0, 1e-12);
    // 40 - 1 * 2 = 38 asks more than the motor has at 2 rad/s.
    const ActuatorParams act;
    EXPECT_NEAR(next[static_cast<size_t>(t)](3), (act.v_bat - act.sigma * 2.0) / act.rho, 1e-12);
  }
  EXPECT_THROW(pd_type_ilc_step(rec, refs, std::vector<Vec4>(2), g, ActuatorParams{}),
               DimensionError);
}

TEST(LearnerTest, Names) {
  for (auto l : {Learner::kProposed, Learner::kPdIlc, Learner::kIlcMpc}) {
    EXPECT_EQ(parse_learner(learner_name(l)), l);
  }
  EXPECT_THROW(parse_learner("magic"), ModelInputError);
}

TEST_F(TrialFixture, MaxTrialsCountsExecutions) {
  LearnOptions opt;
  opt.max_trials = 3;
  int seen = 0;
  const auto h = run_learning(*task_, *refs_, opt, [&](const TrialResult&) { ++seen; });
  ASSERT_EQ(h.trial_count(), 3);
  EXPECT_EQ(seen, 3);
  EXPECT_TRUE(h.trials[0].updated);
  EXPECT_TRUE(h.trials[1].updated);
  EXPECT_FALSE(h.trials[2].updated);
  EXPECT_EQ(h.trials[0].record.final_error(), rec_->final_error());
  for (int k = 0; k < 2; ++k) {
    EXPECT_EQ(h.trials[static_cast<size_t>(k) + 1].u, h.trials[static_cast<size_t>(k)].update.u_next);
    EXPECT_LE(h.trials[static_cast<size_t>(k)].constraint_violation, 1e-6);
    EXPECT_EQ(h.trials[static_cast<size_t>(k)].record.meta.stage, 1);
  }
  opt.max_trials = 1;
  EXPECT_EQ(run_learning(*task_, *refs_, opt).trial_count(), 1);
}

TEST_F(TrialFixture, BaselinesUseTheirUpdates) {
  LearnOptions opt;
  opt.max_trials = 2;
  opt.learner = Learner::kIlcMpc;
  const auto mpc = run_learning(*task_, *refs_, opt);
  EXPECT_EQ(mpc.trials[0].update.stage, 0);
  opt.learner = Learner::kPdIlc;
  const auto pd = run_learning(*task_, *refs_, opt);
  EXPECT_FALSE(pd.trials[0].updated);
  EXPECT_EQ(pd.trials[1].u, refs_->u_init);
  EXPECT_EQ(pd.trials[1].tau_ff,
            pd_type_ilc_step(pd.trials[0].record, *refs_, pd.trials[0].tau_ff, opt.pd,
                             task_->actuator));
}

TEST_F(TrialFixture, TransferToSameTargetStopsAfterReplay) {
  LearnOptions opt;
  const Vec6 e = rec_->final_error();
  opt.tol = {std::abs(e(0)) + 1e-6, std::abs(e(1)) + 1e-6, std::abs(e(2)) + 1e-6};
  JumpTask lenient = *task_;
  lenient.sim.bad_landing = kPi;
  ASSERT_FALSE(rec_->flags.diverged || rec_->flags.collision);
  const auto h = transfer_learning(refs_->u_init, *refs_, lenient, opt);
  ASSERT_EQ(h.trial_count(), 1);
  EXPECT_TRUE(h.converged);
  EXPECT_EQ(h.last().u, refs_->u_init);
}

TEST_F(TrialFixture, TransferUsesGoalStage) {
  LearnOptions opt;
  opt.max_trials = 2;
  JumpTask far = *task_;
  far.target = Vec2(0.7, 0.05);
  const auto h = transfer_learning(refs_->u_init, *refs_, far, opt);
  ASSERT_EQ(h.trial_count(), 2);
  EXPECT_EQ(h.trials[0].u, refs_->u_init);
  EXPECT_EQ(h.trials[0].record.meta.stage, 3);
  EXPECT_EQ(h.trials[0].update.stage, 3);
  const Vec2 moved = h.trials[0].record.body.front().position() * 0.0 + Vec2(0.7, 0.05);
  const Vec6 e = h.trials[0].record.final_error();
  const Vec6 ref_end = e + h.trials[0].record.body.back().vector();
  EXPECT_NEAR(ref_end(0) - refs_->body_ref.front().p_x, moved.x(), 1e-9);
  EXPECT_NEAR(ref_end(1) - refs_->body_ref.front().p_z, moved.y(), 1e-9);
}

}  // namespace
}  // namespace ilcjump::ilc
