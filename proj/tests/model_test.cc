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

// Tests for the single-rigid-body model and its discretization.

#include "ilcjump/model/srb.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

namespace ilcjump {
namespace {

RobotParams SpecParams() {
  RobotParams p;
  p.trunk_inertia = 0.15;
  return p;
}

TEST(SrbAccelTest, FreeFall) {
  RobotParams p;
  FootGeometry feet{{0.2, -0.3}, {-0.1, -0.25}};
  auto acc = srb_continuous_accel({}, ForceSample::Zero(), feet, p);
  EXPECT_DOUBLE_EQ(acc.linear.x(), 0.0);
  EXPECT_DOUBLE_EQ(acc.linear.y(), -9.81);
  EXPECT_DOUBLE_EQ(acc.angular, 0.0);
}

TEST(SrbAccelTest, SingleRearFoot) {
  RobotParams p = SpecParams();
  FootGeometry feet{{0.0, 0.0}, {-0.1, -0.25}};
  ForceSample u(0.0, 0.0, 0.0, 117.7);
  auto acc = srb_continuous_accel({}, u, feet, p);
  EXPECT_NEAR(acc.linear.y(), 117.7 / 9.60 - 9.81, 1e-12);
  EXPECT_NEAR(acc.linear.y(), 2.45, 0.01);
  EXPECT_NEAR(acc.angular, -0.1 * 117.7 / 0.15, 1e-12);
  EXPECT_NEAR(acc.angular, -78.5, 0.1);
}

TEST(SrbAccelTest, MirroredHorizontalForcesCancelButTwist) {
  RobotParams p;
  FootGeometry feet{{0.18, -0.25}, {-0.18, -0.25}};
  ForceSample u(30.0, 0.0, -30.0, 0.0);
  auto acc = srb_continuous_accel({}, u, feet, p);
  EXPECT_DOUBLE_EQ(acc.linear.x(), 0.0);
  EXPECT_DOUBLE_EQ(acc.linear.y(), -9.81);
  // Equal foot heights cancel the moment; distinct heights leave a twist.
  EXPECT_DOUBLE_EQ(acc.angular, 0.0);
  FootGeometry skew{{0.18, -0.20}, {-0.18, -0.30}};
  auto acc2 = srb_continuous_accel({}, u, skew, p);
  EXPECT_DOUBLE_EQ(acc2.linear.x(), 0.0);
  EXPECT_GT(std::abs(acc2.angular), 1.0);
}

TEST(SrbAccelTest, RejectsNonFinite) {
  RobotParams p;
  FootGeometry feet;
  ForceSample u(std::numeric_limits<double>::quiet_NaN(), 0, 0, 0);
  EXPECT_THROW(srb_continuous_accel({}, u, feet, p), ModelInputError);
  BodyState bad;
  bad.v_x = std::numeric_limits<double>::infinity();
  EXPECT_THROW(srb_continuous_accel(bad, ForceSample::Zero(), feet, p), ModelInputError);
}

TEST(DiscretizeTest, TransitionStructure) {
  PhaseSchedule sch;
  RobotParams p;
  std::vector<FootGeometry> feet(static_cast<size_t>(sch.n_c()),
                                 FootGeometry{{0.18, -0.25}, {-0.1, -0.25}});
  auto model = discretize(feet, sch, p);
  for (int i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(model.a_mat(i, i), 1.0);
  EXPECT_DOUBLE_EQ(model.a_mat(0, 3), 0.01);
  EXPECT_DOUBLE_EQ(model.a_mat(1, 4), 0.01);
  EXPECT_DOUBLE_EQ(model.a_mat(2, 5), 0.01);
  EXPECT_EQ(model.b_mats.size(), static_cast<size_t>(sch.n_c()));
  EXPECT_DOUBLE_EQ(model.offset(4), -0.01 * 9.81);
}

TEST(DiscretizeTest, ForceRowsAreDtOverMass) {
  PhaseSchedule sch;
  RobotParams p;
  std::vector<FootGeometry> feet(static_cast<size_t>(sch.n_c()));
  auto model = discretize(feet, sch, p);
  const Mat64& b = model.b_mats.front();
  EXPECT_NEAR(b(3, 0), 1.0417e-3, 1e-7);
  EXPECT_DOUBLE_EQ(b(3, 0), 0.01 / 9.60);
  EXPECT_DOUBLE_EQ(b(4, 1), 0.01 / 9.60);
  EXPECT_DOUBLE_EQ(b(3, 2), 0.01 / 9.60);
  EXPECT_DOUBLE_EQ(b(4, 3), 0.01 / 9.60);
  EXPECT_DOUBLE_EQ(b(3, 1), 0.0);
  EXPECT_TRUE(b.topRows<3>().isZero());
}

TEST(DiscretizeTest, MomentRowsFollowFootPosition) {
  PhaseSchedule sch;
  RobotParams p = SpecParams();
  std::vector<FootGeometry> feet(static_cast<size_t>(sch.n_c()),
                                 FootGeometry{{0.2, -0.25}, {-0.1, -0.25}});
  auto model = discretize(feet, sch, p);
  const Mat64& b = model.b_mats.front();
  EXPECT_NEAR(b(5, 2), 1.667e-2, 1e-5);
  EXPECT_NEAR(b(5, 3), -6.667e-3, 1e-6);

  // Perturbing r_x by delta moves the f_z moment entry by dt * delta / I.
  const double delta = 0.037;
  feet[3].r_rear.x() += delta;
  auto model2 = discretize(feet, sch, p);
  EXPECT_NEAR(model2.b_mats[3](5, 3) - model.b_mats[3](5, 3), 0.01 * delta / 0.15, 1e-15);
}

TEST(DiscretizeTest, WrongLengthIsDimensionError) {
  PhaseSchedule sch;
  std::vector<FootGeometry> feet(7);
  EXPECT_THROW(discretize(feet, sch, RobotParams{}), DimensionError);
}

TEST(DiscretizeTest, EulerStepMatchesContinuousModel) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> st(-2.0, 2.0);
  std::uniform_real_distribution<double> fo(-150.0, 250.0);
  std::uniform_real_distribution<double> rr(-0.4, 0.4);
  PhaseSchedule sch;
  RobotParams p;
  for (int trial = 0; trial < 200; ++trial) {
    BodyState x{st(rng), st(rng), st(rng), st(rng), st(rng), st(rng)};
    ForceSample u(fo(rng), fo(rng), fo(rng), fo(rng));
    FootGeometry feet{{rr(rng), rr(rng)}, {rr(rng), rr(rng)}};
    std::vector<FootGeometry> seq(static_cast<size_t>(sch.n_c()), feet);
    auto model = discretize(seq, sch, p);
    auto acc = srb_continuous_accel(x, u, feet, p);
    Vec6 euler = x.vector();
    euler(0) += sch.dt * x.v_x;
    euler(1) += sch.dt * x.v_z;
    euler(2) += sch.dt * x.omega;
    euler(3) += sch.dt * acc.linear.x();
    euler(4) += sch.dt * acc.linear.y();
    euler(5) += sch.dt * acc.angular;
    Vec6 stepped = model.step(x.vector(), 0, u);
    EXPECT_LT((stepped - euler).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(BodyStateTest, VectorOrder) {
  BodyState s{1, 2, 3, 4, 5, 6};
  Vec6 v = s.vector();
  for (int i = 0; i < 6; ++i) EXPECT_EQ(v(i), i + 1);
  auto back = BodyState::from_vector(v);
  EXPECT_EQ(back.omega, 6);
}

TEST(ParamsTest, Validation) {
  PhaseSchedule sch;
  EXPECT_EQ(sch.n_c(), sch.n_dc + sch.n_sc);
  EXPECT_EQ(sch.n(), sch.n_c() + sch.n_fl);
  sch.n_sc = 0;
  EXPECT_THROW(sch.validate(), ModelInputError);

  ActuatorParams act;
  EXPECT_NO_THROW(act.validate());
  act.sigma = 2.0;  // v_bat / sigma far below qdot_max
  EXPECT_THROW(act.validate(), ModelInputError);

  RobotParams p;
  EXPECT_NEAR(p.trunk_inertia, 0.117, 1e-3);
  p.calf_mass = 0.0;
  EXPECT_THROW(p.validate(), ModelInputError);
}

}  // namespace
}  // namespace ilcjump
