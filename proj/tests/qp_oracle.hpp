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

// Brute-force QP oracle for tests: enumerate every subset of inequality rows
// as an active set, solve the equality-constrained subproblem, keep the
// feasible point with the lowest objective. Only sensible for m <= ~10.

#pragma once

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <random>

#include "ilcjump/qp/qp.hpp"

namespace ilcjump::qp::testing {

struct OracleResult {
  Eigen::VectorXd z;
  double objective = std::numeric_limits<double>::infinity();
};

inline std::optional<OracleResult> EnumerateActiveSets(const QpProblem& p) {
  const auto n = p.n();
  const auto mi = p.m_ineq();
  const auto me = p.m_eq();
  std::optional<OracleResult> best;
  for (unsigned mask = 0; mask < (1u << mi); ++mask) {
    int na = 0;
    for (Eigen::Index i = 0; i < mi; ++i) na += (mask >> i) & 1u;
    const auto k = n + me + na;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
    kkt.topLeftCorner(n, n) = p.w;
    rhs.head(n) = -p.h;
    Eigen::Index row = n;
    for (Eigen::Index i = 0; i < me; ++i, ++row) {
      kkt.block(row, 0, 1, n) = p.e_mat.row(i);
      kkt.block(0, row, n, 1) = p.e_mat.row(i).transpose();
      rhs(row) = p.e_vec(i);
    }
    for (Eigen::Index i = 0; i < mi; ++i) {
      if (!((mask >> i) & 1u)) continue;
      kkt.block(row, 0, 1, n) = p.g_mat.row(i);
      kkt.block(0, row, n, 1) = p.g_mat.row(i).transpose();
      rhs(row) = p.g_vec(i);
      ++row;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    Eigen::VectorXd z = lu.solve(rhs).head(n);
    if (mi > 0 && ((p.g_mat * z - p.g_vec).array() > 1e-9).any()) continue;
    if (me > 0 && (p.e_mat * z - p.e_vec).cwiseAbs().maxCoeff() > 1e-9) continue;
    const double obj = p.objective(z);
    if (!best || obj < best->objective) best = OracleResult{z, obj};
  }
  return best;
}

/// Strictly convex, feasible, n <= 6, m_ineq <= 8, m_eq <= 2.
inline QpProblem RandomFeasibleQp(std::mt19937& rng) {
  std::uniform_int_distribution<int> dim(1, 6);
  std::normal_distribution<double> nd;
  const int n = dim(rng);
  const int mi = std::uniform_int_distribution<int>(0, 8)(rng);
  const int me = std::uniform_int_distribution<int>(0, std::min(2, n - 1))(rng);
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  QpProblem p;
  p.w = m.transpose() * m + 0.1 * Eigen::MatrixXd::Identity(n, n);
  p.h.resize(n);
  for (int i = 0; i < n; ++i) p.h(i) = 3.0 * nd(rng);
  Eigen::VectorXd z0(n);
  for (int i = 0; i < n; ++i) z0(i) = nd(rng);
  p.g_mat.resize(mi, n);
  p.g_vec.resize(mi);
  for (int i = 0; i < mi; ++i) {
    for (int j = 0; j < n; ++j) p.g_mat(i, j) = nd(rng);
    const double slack = (rng() % 3 == 0) ? 0.0 : std::abs(nd(rng));
    p.g_vec(i) = p.g_mat.row(i).dot(z0) + slack;
  }
  p.e_mat.resize(me, n);
  p.e_vec.resize(me);
  for (int i = 0; i < me; ++i) {
    for (int j = 0; j < n; ++j) p.e_mat(i, j) = nd(rng);
    p.e_vec(i) = p.e_mat.row(i).dot(z0);
  }
  return p;
}

}  // namespace ilcjump::qp::testing
