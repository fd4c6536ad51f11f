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

// Dense convex QP
//
//   minimize    1/2 z' W z + h' z
//   subject to  G z <= g,  E z = e
//
// solved by operator splitting (ADMM on the l <= A z <= u form, with Ruiz
// equilibration, over-relaxation and adaptive penalty) followed by an
// active-set polish that solves the equality-constrained KKT system of the
// identified active set and corrects it until the KKT conditions hold.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ilcjump/errors.hpp"

namespace ilcjump::qp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct QpProblem {
  MatrixXd w;
  VectorXd h;
  MatrixXd g_mat;
  VectorXd g_vec;
  MatrixXd e_mat;
  VectorXd e_vec;

  Eigen::Index n() const { return h.size(); }
  Eigen::Index m_ineq() const { return g_vec.size(); }
  Eigen::Index m_eq() const { return e_vec.size(); }

  /// Unconstrained problem of dimension n.
  static QpProblem unconstrained(MatrixXd w, VectorXd h) {
    QpProblem p;
    const auto n = h.size();
    p.w = std::move(w);
    p.h = std::move(h);
    p.g_mat.resize(0, n);
    p.e_mat.resize(0, n);
    return p;
  }

  void validate() const {
    const auto n = h.size();
    if (w.rows() != n || w.cols() != n) throw DimensionError("qp: W must be n x n");
    if (g_mat.rows() != g_vec.size() || (g_mat.rows() > 0 && g_mat.cols() != n)) {
      throw DimensionError("qp: inequality system has inconsistent dimensions");
    }
    if (e_mat.rows() != e_vec.size() || (e_mat.rows() > 0 && e_mat.cols() != n)) {
      throw DimensionError("qp: equality system has inconsistent dimensions");
    }
    const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
    if ((w - w.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
      throw ModelInputError("qp: W is not symmetric");
    }
    if (!w.allFinite() || !h.allFinite() || !g_mat.allFinite() ||
        !e_mat.allFinite() || !e_vec.allFinite() || g_vec.hasNaN()) {
      throw ModelInputError("qp: non-finite problem data");
    }
  }

  double objective(const VectorXd& z) const { return 0.5 * z.dot(w * z) + h.dot(z); }
};

enum class QpStatus { kOptimal, kInfeasible, kMaxIterations };

inline const char* status_name(QpStatus s) {
  switch (s) {
    case QpStatus::kOptimal: return "optimal";
    case QpStatus::kInfeasible: return "infeasible";
    case QpStatus::kMaxIterations: return "max-iterations";
  }
  return "?";
}

struct QpSolution {
  VectorXd z;
  VectorXd y_ineq;  // >= 0, one per row of G
  VectorXd y_eq;    // free, one per row of E
  QpStatus status = QpStatus::kMaxIterations;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double kkt_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool polished = false;
};

struct QpSettings {
  double tol = 1e-8;
  int max_iter = 20000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  double admm_eps = 1e-7;
  double infeasibility_eps = 1e-6;
  int check_every = 25;
  int scaling_iters = 15;
  int polish_rounds = 40;
};

/// Max of stationarity norm, primal violation, and complementarity violation
/// (including dual sign violation of inequality multipliers).
inline double kkt_residual(const QpProblem& p, const VectorXd& z,
                           const VectorXd& y_ineq, const VectorXd& y_eq) {
  if (z.size() != p.n() || y_ineq.size() != p.m_ineq() || y_eq.size() != p.m_eq()) {
    throw DimensionError("kkt_residual: dimension mismatch");
  }
  VectorXd grad = p.w * z + p.h;
  if (p.m_ineq() > 0) grad += p.g_mat.transpose() * y_ineq;
  if (p.m_eq() > 0) grad += p.e_mat.transpose() * y_eq;
  double res = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
  if (p.m_ineq() > 0) {
    const VectorXd slack = p.g_vec - p.g_mat * z;
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
      res = std::max(res, -slack(i));
      res = std::max(res, -y_ineq(i));
      if (std::isfinite(slack(i))) res = std::max(res, std::abs(y_ineq(i) * slack(i)));
    }
  }
  if (p.m_eq() > 0) {
    res = std::max(res, (p.e_mat * z - p.e_vec).cwiseAbs().maxCoeff());
  }
  return res;
}

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double inf_norm(const VectorXd& v) {
  return v.size() > 0 ? v.cwiseAbs().maxCoeff() : 0.0;
}

// Problem in the l <= A x <= u form plus the Ruiz scaling applied to it.
struct Stacked {
  MatrixXd p;
  VectorXd q;
  MatrixXd a;
  VectorXd l;
  VectorXd u;
  VectorXd d;  // variable scaling
  VectorXd e;  // constraint scaling
  double c = 1.0;
};

inline Stacked stack(const QpProblem& prob) {
  const auto n = prob.n();
  const auto mi = prob.m_ineq();
  const auto me = prob.m_eq();
  Stacked s;
  s.p = prob.w;
  s.q = prob.h;
  s.a.resize(mi + me, n);
  s.l.resize(mi + me);
  s.u.resize(mi + me);
  if (mi > 0) {
    s.a.topRows(mi) = prob.g_mat;
    s.l.head(mi).setConstant(-kInf);
    s.u.head(mi) = prob.g_vec;
  }
  if (me > 0) {
    s.a.bottomRows(me) = prob.e_mat;
    s.l.tail(me) = prob.e_vec;
    s.u.tail(me) = prob.e_vec;
  }
  s.d = VectorXd::Ones(n);
  s.e = VectorXd::Ones(mi + me);
  return s;
}

// Ruiz equilibration of [P A'; A 0] followed by cost scaling.
inline void equilibrate(Stacked& s, int iters) {
  const auto n = s.p.rows();
  const auto m = s.a.rows();
  for (int it = 0; it < iters; ++it) {
    VectorXd dn(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      double col = s.p.col(j).cwiseAbs().maxCoeff();
      if (m > 0) col = std::max(col, s.a.col(j).cwiseAbs().maxCoeff());
      dn(j) = col < 1e-8 ? 1.0 : 1.0 / std::sqrt(col);
    }
    VectorXd em(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double row = s.a.row(i).cwiseAbs().maxCoeff();
      em(i) = row < 1e-8 ? 1.0 : 1.0 / std::sqrt(row);
    }
    s.p = dn.asDiagonal() * s.p * dn.asDiagonal();
    s.q = dn.cwiseProduct(s.q);
    if (m > 0) {
      s.a = em.asDiagonal() * s.a * dn.asDiagonal();
      s.l = em.cwiseProduct(s.l);
      s.u = em.cwiseProduct(s.u);
    }
    s.d = s.d.cwiseProduct(dn);
    s.e = s.e.cwiseProduct(em);
  }
  double pnorm = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) pnorm += s.p.col(j).cwiseAbs().maxCoeff();
  pnorm = n > 0 ? pnorm / static_cast<double>(n) : 0.0;
  const double cost = std::max(pnorm, inf_norm(s.q));
  s.c = cost < 1e-8 ? 1.0 : std::min(1.0 / cost, 1e4);
  s.p *= s.c;
  s.q *= s.c;
}

inline VectorXd project(const VectorXd& v, const VectorXd& l, const VectorXd& u) {
  return v.cwiseMax(l).cwiseMin(u);
}

// Equality-constrained KKT solve on a candidate active set; returns false if
// the reduced system is singular.
inline bool solve_active(const QpProblem& prob, const std::vector<int>& act_ineq,
                         VectorXd& z, VectorXd& y_ineq, VectorXd& y_eq) {
  const auto n = prob.n();
  const auto me = prob.m_eq();
  const auto na = static_cast<Eigen::Index>(act_ineq.size());
  const auto k = n + me + na;
  MatrixXd kkt = MatrixXd::Zero(k, k);
  VectorXd rhs = VectorXd::Zero(k);
  kkt.topLeftCorner(n, n) = prob.w;
  rhs.head(n) = -prob.h;
  Eigen::Index row = n;
  for (Eigen::Index i = 0; i < me; ++i, ++row) {
    kkt.block(row, 0, 1, n) = prob.e_mat.row(i);
    kkt.block(0, row, n, 1) = prob.e_mat.row(i).transpose();
    rhs(row) = prob.e_vec(i);
  }
  for (int i : act_ineq) {
    kkt.block(row, 0, 1, n) = prob.g_mat.row(i);
    kkt.block(0, row, n, 1) = prob.g_mat.row(i).transpose();
    rhs(row) = prob.g_vec(i);
    ++row;
  }
  Eigen::FullPivLU<MatrixXd> lu(kkt);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible()) {
    // Redundant active rows: fall back to a least-squares solution.
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(kkt);
    VectorXd sol = cod.solve(rhs);
    if (!sol.allFinite() || (kkt * sol - rhs).cwiseAbs().maxCoeff() > 1e-8 *
                                std::max(1.0, inf_norm(rhs))) {
      return false;
    }
    z = sol.head(n);
    y_eq = sol.segment(n, me);
    y_ineq = VectorXd::Zero(prob.m_ineq());
    for (Eigen::Index a = 0; a < na; ++a) y_ineq(act_ineq[a]) = sol(n + me + a);
    return true;
  }
  VectorXd sol = lu.solve(rhs);
  // One step of iterative refinement.
  sol += lu.solve(rhs - kkt * sol);
  if (!sol.allFinite()) return false;
  z = sol.head(n);
  y_eq = sol.segment(n, me);
  y_ineq = VectorXd::Zero(prob.m_ineq());
  for (Eigen::Index a = 0; a < na; ++a) y_ineq(act_ineq[a]) = sol(n + me + a);
  return true;
}

// Primal-dual active-set correction starting from the ADMM active set.
inline bool polish(const QpProblem& prob, const QpSettings& set, VectorXd& z,
                   VectorXd& y_ineq, VectorXd& y_eq) {
  const auto mi = prob.m_ineq();
  std::vector<char> active(static_cast<size_t>(mi), 0);
  {
    const VectorXd slack = mi > 0 ? VectorXd(prob.g_vec - prob.g_mat * z) : VectorXd();
    for (Eigen::Index i = 0; i < mi; ++i) {
      active[static_cast<size_t>(i)] = (y_ineq(i) > slack(i)) ? 1 : 0;
    }
  }
  VectorXd zc = z, yi = y_ineq, ye = y_eq;
  for (int round = 0; round < set.polish_rounds; ++round) {
    std::vector<int> act;
    for (Eigen::Index i = 0; i < mi; ++i) {
      if (active[static_cast<size_t>(i)]) act.push_back(static_cast<int>(i));
    }
    if (!solve_active(prob, act, zc, yi, ye)) return false;
    const double scale = std::max(1.0, inf_norm(prob.h));
    const double ftol = 1e-11 * std::max(1.0, inf_norm(prob.g_vec.unaryExpr(
                                                  [](double v) { return std::isfinite(v) ? v : 0.0; })));
    bool changed = false;
    // Drop the most negative multiplier first, otherwise add the most
    // violated constraint.
    int worst_drop = -1;
    double worst_mult = -1e-12 * scale;
    for (int i : act) {
      if (yi(i) < worst_mult) {
        worst_mult = yi(i);
        worst_drop = i;
      }
    }
    if (worst_drop >= 0) {
      active[static_cast<size_t>(worst_drop)] = 0;
      changed = true;
    } else if (mi > 0) {
      const VectorXd viol = prob.g_mat * zc - prob.g_vec;
      Eigen::Index worst_add = -1;
      double worst_v = ftol;
      for (Eigen::Index i = 0; i < mi; ++i) {
        if (!active[static_cast<size_t>(i)] && viol(i) > worst_v) {
          worst_v = viol(i);
          worst_add = i;
        }
      }
      if (worst_add >= 0) {
        active[static_cast<size_t>(worst_add)] = 1;
        changed = true;
      }
    }
    if (!changed) {
      z = zc;
      y_ineq = yi.cwiseMax(0.0);
      y_eq = ye;
      return true;
    }
  }
  return false;
}

}  // namespace detail

inline QpSolution solve(const QpProblem& prob_in, const QpSettings& set = {}) {
  prob_in.validate();
  QpProblem prob = prob_in;
  const auto n = prob.n();
  const auto mi = prob.m_ineq();
  const auto me = prob.m_eq();
  const auto m = mi + me;

  // PSD repair: a negative pivot in LDLT means W is not PSD.
  {
    Eigen::LDLT<MatrixXd> ldlt(prob.w);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() < 0.0).any()) {
      prob.w += 1e-9 * MatrixXd::Identity(n, n);
    }
  }

  QpSolution sol;
  if (m == 0) {
    // Unconstrained: solve W z = -h directly.
    Eigen::LDLT<MatrixXd> ldlt(prob.w);
    VectorXd z = ldlt.solve(-prob.h);
    if (!z.allFinite() || (prob.w * z + prob.h).cwiseAbs().maxCoeff() > 1e-6) {
      Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(prob.w);
      z = cod.solve(-prob.h);
    }
    sol.z = z;
    sol.y_ineq = VectorXd::Zero(0);
    sol.y_eq = VectorXd::Zero(0);
    sol.objective = prob_in.objective(z);
    sol.kkt_residual = kkt_residual(prob_in, z, sol.y_ineq, sol.y_eq);
    sol.status = sol.kkt_residual <= std::max(set.tol, 1e-9 * std::max(1.0, detail::inf_norm(prob.h)))
                     ? QpStatus::kOptimal
                     : QpStatus::kMaxIterations;
    return sol;
  }

  detail::Stacked s = detail::stack(prob);
  detail::equilibrate(s, set.scaling_iters);

  VectorXd rho_vec(m);
  double rho = set.rho;
  auto fill_rho = [&](double r) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const bool eq = std::isfinite(s.l(i)) && std::isfinite(s.u(i)) &&
                      std::abs(s.u(i) - s.l(i)) < 1e-12;
      rho_vec(i) = eq ? 1e3 * r : r;
    }
  };
  fill_rho(rho);
  auto factor = [&]() {
    MatrixXd k = s.p + set.sigma * MatrixXd::Identity(n, n) +
                 s.a.transpose() * rho_vec.asDiagonal() * s.a;
    return Eigen::LLT<MatrixXd>(k);
  };
  Eigen::LLT<MatrixXd> llt = factor();

  VectorXd x = VectorXd::Zero(n);
  VectorXd z = detail::project(VectorXd::Zero(m), s.l, s.u);
  VectorXd y = VectorXd::Zero(m);

  const VectorXd dinv = s.d.cwiseInverse();
  const VectorXd einv = s.e.cwiseInverse();

  bool converged = false;
  bool infeasible = false;
  int iter = 0;
  for (iter = 1; iter <= set.max_iter; ++iter) {
    const VectorXd rhs = set.sigma * x - s.q + s.a.transpose() * (rho_vec.cwiseProduct(z) - y);
    const VectorXd xt = llt.solve(rhs);
    const VectorXd zt = s.a * xt;
    const VectorXd x_new = set.alpha * xt + (1.0 - set.alpha) * x;
    const VectorXd z_relax = set.alpha * zt + (1.0 - set.alpha) * z;
    const VectorXd z_new = detail::project(z_relax + y.cwiseQuotient(rho_vec), s.l, s.u);
    const VectorXd y_new = y + rho_vec.cwiseProduct(z_relax - z_new);
    const VectorXd dy = y_new - y;
    x = x_new;
    z = z_new;
    y = y_new;

    if (iter % set.check_every != 0 && iter != set.max_iter) continue;

    // Residuals in unscaled units.
    const VectorXd ax = einv.cwiseProduct(s.a * x);
    const VectorXd zu = einv.cwiseProduct(z);
    const VectorXd px = dinv.cwiseProduct(s.p * x) / s.c;
    const VectorXd aty = dinv.cwiseProduct(s.a.transpose() * y) / s.c;
    const VectorXd qu = dinv.cwiseProduct(s.q) / s.c;
    const double r_prim = detail::inf_norm(ax - zu);
    const double r_dual = detail::inf_norm(px + qu + aty);
    const double prim_scale = std::max(detail::inf_norm(ax), detail::inf_norm(zu));
    const double dual_scale = std::max({detail::inf_norm(px), detail::inf_norm(aty), detail::inf_norm(qu)});
    if (r_prim <= set.admm_eps * (1.0 + prim_scale) && r_dual <= set.admm_eps * (1.0 + dual_scale)) {
      converged = true;
      break;
    }

    // Primal infeasibility certificate on the scaled iterates.
    const double dy_norm = detail::inf_norm(s.e.cwiseProduct(dy));
    if (dy_norm > 1e-12) {
      const double aty_norm = detail::inf_norm(dinv.cwiseProduct(s.a.transpose() * dy));
      double support = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (dy(i) > 0.0) {
          support += std::isfinite(s.u(i)) ? s.u(i) * dy(i) : detail::kInf;
        } else if (dy(i) < 0.0) {
          support += std::isfinite(s.l(i)) ? s.l(i) * dy(i) : detail::kInf;
        }
      }
      if (aty_norm <= set.infeasibility_eps * dy_norm &&
          support <= -set.infeasibility_eps * dy_norm) {
        infeasible = true;
        break;
      }
    }

    // Adaptive penalty.
    const double num = r_prim / std::max(prim_scale, 1e-12);
    const double den = r_dual / std::max(dual_scale, 1e-12);
    if (den > 0.0 && num > 0.0) {
      const double new_rho = std::clamp(rho * std::sqrt(num / den), 1e-6, 1e6);
      if (new_rho > 5.0 * rho || new_rho < 0.2 * rho) {
        rho = new_rho;
        fill_rho(rho);
        llt = factor();
      }
    }
  }
  sol.iterations = std::min(iter, set.max_iter);

  // Unscale.
  VectorXd zx = s.d.cwiseProduct(x);
  VectorXd yall = s.e.cwiseProduct(y) / s.c;
  sol.z = zx;
  sol.y_ineq = mi > 0 ? VectorXd(yall.head(mi).cwiseMax(0.0)) : VectorXd::Zero(0);
  sol.y_eq = me > 0 ? VectorXd(yall.tail(me)) : VectorXd::Zero(0);

  if (infeasible) {
    sol.status = QpStatus::kInfeasible;
    sol.objective = prob_in.objective(sol.z);
    sol.kkt_residual = kkt_residual(prob_in, sol.z, sol.y_ineq, sol.y_eq);
    return sol;
  }

  VectorXd zp = sol.z, yip = sol.y_ineq, yep = sol.y_eq;
  if (detail::polish(prob, set, zp, yip, yep)) {
    const double res_p = kkt_residual(prob_in, zp, yip, yep);
    const double res_a = kkt_residual(prob_in, sol.z, sol.y_ineq, sol.y_eq);
    if (res_p <= res_a) {
      sol.z = zp;
      sol.y_ineq = yip;
      sol.y_eq = yep;
      sol.polished = true;
    }
  }
  sol.objective = prob_in.objective(sol.z);
  sol.kkt_residual = kkt_residual(prob_in, sol.z, sol.y_ineq, sol.y_eq);
  // Tolerance relative to the problem's data scale.
  const double data_scale = std::max({1.0, detail::inf_norm(prob.h),
                                      sol.y_ineq.size() ? detail::inf_norm(sol.y_ineq) : 0.0,
                                      sol.y_eq.size() ? detail::inf_norm(sol.y_eq) : 0.0});
  if (sol.kkt_residual <= set.tol * data_scale) {
    sol.status = QpStatus::kOptimal;
  } else if (!converged) {
    sol.status = QpStatus::kMaxIterations;
  } else {
    // ADMM converged to its own tolerance but polish could not tighten it;
    // report the iterate as optimal only when it is within the ADMM bound.
    sol.status = sol.kkt_residual <= 1e-5 * data_scale ? QpStatus::kOptimal
                                                        : QpStatus::kMaxIterations;
  }
  return sol;
}

}  // namespace ilcjump::qp
