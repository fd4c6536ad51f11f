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

#include "ilcjump/qp/qp.hpp"

#include <chrono>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "qp_oracle.hpp"

namespace ilcjump::qp {
namespace {

QpProblem Scalar(double w, double h) {
  return QpProblem::unconstrained(MatrixXd::Constant(1, 1, w), VectorXd::Constant(1, h));
}

TEST(QpSolveTest, UnconstrainedStationaryPoint) {
  auto sol = solve(Scalar(1.0, -1.0));
  ASSERT_EQ(sol.status, QpStatus::kOptimal);
  EXPECT_NEAR(sol.z(0), 1.0, 1e-12);
}

TEST(QpSolveTest, ActiveUpperBound) {
  QpProblem p = Scalar(1.0, -2.0);
  p.g_mat = MatrixXd::Ones(1, 1);
  p.g_vec = VectorXd::Ones(1);
  auto sol = solve(p);
  ASSERT_EQ(sol.status, QpStatus::kOptimal);
  EXPECT_NEAR(sol.z(0), 1.0, 1e-9);
  EXPECT_NEAR(sol.y_ineq(0), 1.0, 1e-9);
  EXPECT_LT(sol.kkt_residual, 1e-8);
}

TEST(KktResidualTest, ExactPointAndGradient) {
  QpProblem p = Scalar(1.0, -2.0);
  p.g_mat = MatrixXd::Ones(1, 1);
  p.g_vec = VectorXd::Ones(1);
  EXPECT_LT(kkt_residual(p, VectorXd::Ones(1), VectorXd::Ones(1), VectorXd::Zero(0)), 1e-10);

  QpProblem q = Scalar(1.0, -1.0);
  EXPECT_DOUBLE_EQ(kkt_residual(q, VectorXd::Zero(1), VectorXd::Zero(0), VectorXd::Zero(0)), 1.0);

  // Feasible but suboptimal.
  EXPECT_GT(kkt_residual(p, VectorXd::Constant(1, 0.5), VectorXd::Zero(1), VectorXd::Zero(0)), 0.0);
}

TEST(KktResidualTest, DimensionMismatchThrows) {
  QpProblem p = Scalar(1.0, 0.0);
  EXPECT_THROW(kkt_residual(p, VectorXd::Zero(2), VectorXd::Zero(0), VectorXd::Zero(0)),
               DimensionError);
}

TEST(QpSolveTest, DetectsInfeasibleBox) {
  QpProblem p = Scalar(1.0, 0.0);
  p.g_mat.resize(2, 1);
  p.g_mat << 1.0, -1.0;
  p.g_vec.resize(2);
  p.g_vec << -1.0, -1.0;  // z <= -1 and z >= 1
  auto sol = solve(p);
  EXPECT_EQ(sol.status, QpStatus::kInfeasible);
}

TEST(QpSolveTest, DetectsInconsistentEqualities) {
  QpProblem p = QpProblem::unconstrained(MatrixXd::Identity(2, 2), VectorXd::Zero(2));
  p.e_mat.resize(2, 2);
  p.e_mat << 1, 1, 2, 2;
  p.e_vec.resize(2);
  p.e_vec << 1, 3;
  p.g_vec.resize(0);
  auto sol = solve(p);
  EXPECT_NE(sol.status, QpStatus::kOptimal);
}

TEST(QpSolveTest, IterationCapReturnsBestIterate) {
  QpProblem p = Scalar(1.0, -2.0);
  p.g_mat = MatrixXd::Ones(1, 1);
  p.g_vec = VectorXd::Ones(1);
  QpSettings s;
  s.max_iter = 1;
  s.polish_rounds = 0;
  auto sol = solve(p, s);
  EXPECT_EQ(sol.status, QpStatus::kMaxIterations);
  EXPECT_TRUE(sol.z.allFinite());
}

TEST(QpSolveTest, RejectsAsymmetricW) {
  QpProblem p = QpProblem::unconstrained(MatrixXd::Identity(2, 2), VectorXd::Zero(2));
  p.w(0, 1) = 1.0;
  EXPECT_THROW(solve(p), ModelInputError);
}

TEST(QpSolveTest, PsdOnlyWithEqualities) {
  // W singular (zero weight on the second coordinate), pinned by equality.
  MatrixXd w = MatrixXd::Zero(2, 2);
  w(0, 0) = 2.0;
  VectorXd h(2);
  h << -2.0, -3.0;
  QpProblem p = QpProblem::unconstrained(w, h);
  p.e_mat = MatrixXd::Ones(1, 2);
  p.e_vec = VectorXd::Constant(1, 0.5);
  p.g_mat = MatrixXd::Zero(1, 2);
  p.g_mat(0, 1) = 1.0;
  p.g_vec = VectorXd::Constant(1, 0.8);
  auto sol = solve(p);
  ASSERT_EQ(sol.status, QpStatus::kOptimal);
  // On the line z0 + z1 = 0.5 the cost is z0^2 + z0 - 1.5, minimized at
  // z0 = -0.5; the bound z1 <= 0.8 stops it at z0 = -0.3.
  EXPECT_NEAR(sol.z(0), -0.3, 1e-7);
  EXPECT_NEAR(sol.z(1), 0.8, 1e-7);
}

TEST(QpSolveTest, MatchesActiveSetEnumeration) {
  std::mt19937 rng(2024);
  int checked = 0;
  double worst_z = 0.0, worst_obj = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    QpProblem p = testing::RandomFeasibleQp(rng);
    auto oracle = testing::EnumerateActiveSets(p);
    ASSERT_TRUE(oracle.has_value());
    auto sol = solve(p);
    ASSERT_EQ(sol.status, QpStatus::kOptimal) << "trial " << trial;
    worst_z = std::max(worst_z, (sol.z - oracle->z).cwiseAbs().maxCoeff());
    worst_obj = std::max(worst_obj, std::abs(sol.objective - oracle->objective));
    ++checked;
  }
  EXPECT_EQ(checked, 200);
  EXPECT_LT(worst_z, 1e-6);
  EXPECT_LT(worst_obj, 1e-6);
}

TEST(QpSolveTest, ArgminInvariantUnderCostScaling) {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    QpProblem p = testing::RandomFeasibleQp(rng);
    auto base = solve(p);
    ASSERT_EQ(base.status, QpStatus::kOptimal);
    for (double s : {1e-3, 7.0, 250.0}) {
      QpProblem q = p;
      q.w *= s;
      q.h *= s;
      auto scaled = solve(q);
      ASSERT_EQ(scaled.status, QpStatus::kOptimal);
      EXPECT_LT((scaled.z - base.z).cwiseAbs().maxCoeff(), 1e-7);
    }
  }
}

TEST(QpSolveTest, IlcSizedProblemUnderOneSecond) {
  std::mt19937 rng(1);
  const int n = 200, mi = 600, me = 40;
  std::normal_distribution<double> nd;
  MatrixXd g(6, n);
  for (int i = 0; i < g.size(); ++i) g.data()[i] = 1e-3 * nd(rng);
  MatrixXd w = 2.0 * (g.transpose() * g + 1e-5 * MatrixXd::Identity(n, n));
  VectorXd err(6);
  for (int i = 0; i < 6; ++i) err(i) = 0.1 * nd(rng);
  QpProblem p = QpProblem::unconstrained(w, -2.0 * g.transpose() * err);
  p.g_mat.resize(mi, n);
  p.g_vec.resize(mi);
  for (int i = 0; i < mi; ++i) {
    p.g_mat.row(i).setZero();
    for (int k = 0; k < 3; ++k) {
      p.g_mat(i, static_cast<int>(rng() % n)) = nd(rng);
    }
    p.g_vec(i) = 5.0 + 20.0 * std::abs(nd(rng));
  }
  p.e_mat = MatrixXd::Zero(me, n);
  p.e_vec = VectorXd::Zero(me);
  for (int i = 0; i < me; ++i) p.e_mat(i, n - 1 - i) = 1.0;
  const auto t0 = std::chrono::steady_clock::now();
  auto sol = solve(p);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(sol.status, QpStatus::kOptimal);
  EXPECT_LT(secs, 1.0);
}

}  // namespace
}  // namespace ilcjump::qp
