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


// Acceptance runner: learning campaigns on the articulated plant plus exact
// property checks. Prints one PASS/FAIL line per criterion and exits 1 if
// any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "../tests/qp_oracle.hpp"
#include "ilcjump/experiment/campaign.hpp"

namespace ex = ilcjump::experiment;
namespace ilc = ilcjump::ilc;
using namespace ilcjump;

namespace {

// Tolerances.
constexpr double kTolX = 0.02, kTolZ = 0.03, kTolThetaDeg = 2.0;
constexpr double kPayloadDistance = 0.02;
constexpr int kScratchTrials = 25, kPayloadTrials = 30, kTransferTrials = 12;
constexpr double kBadLandingDeg = 70.0;
constexpr double kConstraintSlack = 1e-9;
constexpr double kQpSeconds = 1.0;
constexpr int kOracleQps = 200;
constexpr double kOracleTol = 1e-6;
constexpr double kLiftedTol = 1e-10;
constexpr double kFkTol = 1e-9, kJacobianTol = 1e-6;
constexpr double kPdDrop = 0.5;
constexpr int kPdTrials = 20;

int failures = 0;

void verdict(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %-28s %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ex::TaskSpec task(const std::string& yaml, int max_trials, ilc::Learner learner) {
  ex::TaskSpec s = ex::parse_task_text(yaml);
  s.opt.max_trials = max_trials;
  s.opt.learner = learner;
  s.opt.tol = {kTolX, kTolZ, deg2rad(kTolThetaDeg)};
  return s;
}

struct Campaign {
  std::string name;
  ex::TaskSpec spec;
  ex::RunResult run;
};

struct Runner {
  ex::ReferenceCache cache;
  std::string out;
  bool verbose = false;
  std::vector<const Campaign*> all;

  ilc::TrialCallback progress(const std::string& name) const {
    if (!verbose) return {};
    return [name](const ilc::TrialResult& r) {
      const Vec6 e = r.record.final_error();
      std::fprintf(stderr, "  %-22s trial %2d  (%6.2f cm, %6.2f cm, %7.2f deg)\n", name.c_str(),
                   r.record.meta.trial + 1, 100 * e(0), 100 * e(1), rad2deg(e(2)));
    };
  }

  void save(const Campaign& c) {
    if (!out.empty()) {
      ex::write_run(std::filesystem::path(out) / c.name, c.spec, c.run.history, c.run.refs, true);
    }
  }

  Campaign learn(const std::string& name, const ex::TaskSpec& s) {
    const auto t0 = std::chrono::steady_clock::now();
    Campaign c{name, s, ex::learn(s, &cache, progress(name))};
    report(c, t0);
    return c;
  }

  Campaign transfer(const std::string& name, const ex::TaskSpec& s, const Campaign& from) {
    const auto t0 = std::chrono::steady_clock::now();
    const ex::LearnedRun src{from.run.refs, from.run.history.last().u,
                             from.run.history.converged, from.spec.task.id};
    Campaign c{name, s, ex::transfer(s, src, progress(name))};
    report(c, t0);
    return c;
  }

  void report(const Campaign& c, std::chrono::steady_clock::time_point t0) {
    const auto& h = c.run.history;
    const Vec6 e = h.last().record.final_error();
    std::fprintf(stderr, "campaign %-22s %-8s %2d trials %-13s last (%.2f cm, %.2f cm, %.2f deg)  %.0f s\n",
                 c.name.c_str(), ilc::learner_name(h.learner), h.trial_count(),
                 h.converged ? "converged" : "not converged", 100 * e(0), 100 * e(1),
                 rad2deg(e(2)),
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    save(c);
  }
};

std::string last_error(const ilc::History& h) {
  const Vec6 e = h.last().record.final_error();
  return fmt("%d trials, last (%.2f cm, %.2f cm, %.2f deg)", h.trial_count(), 100 * e(0),
             100 * e(1), rad2deg(e(2)));
}

// Converged within `limit` trials, checked on the trial itself.
bool converged_within(const ilc::History& h, int limit) {
  return h.converged && h.trial_count() <= limit && !h.last().record.flags.any() &&
         h.last().within_tol;
}

int bad_landings(const ilc::History& h) {
  int n = 0;
  for (const auto& t : h.trials) {
    n += std::abs(t.record.body.back().theta) > deg2rad(kBadLandingDeg);
  }
  return n;
}

// --- exact properties -------------------------------------------------------

void qp_oracle() {
  std::mt19937 rng(2026);
  int matched = 0;
  double worst = 0.0;
  for (int i = 0; i < kOracleQps; ++i) {
    const qp::QpProblem p = qp::testing::RandomFeasibleQp(rng);
    const auto ref = qp::testing::EnumerateActiveSets(p);
    if (!ref) continue;  // counts as a mismatch
    const qp::QpSolution r = qp::solve(p);
    const double d = (r.z - ref->z).cwiseAbs().maxCoeff();
    worst = std::max(worst, d);
    matched += r.status == qp::QpStatus::kOptimal && d <= kOracleTol;
  }
  verdict(8, "QP oracle", matched == kOracleQps,
          fmt("%d/%d match, worst |dz| %.2e (tol %.0e)", matched, kOracleQps, worst, kOracleTol));
}

void lifted_identity() {
  std::mt19937 rng(9);
  const PhaseSchedule sch;
  const RobotParams robot;
  std::uniform_real_distribution<double> fx(-0.25, 0.25), fz(-0.3, -0.15), f(-1.0, 1.0);
  double worst_pred = 0.0, worst_flight = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<FootGeometry> feet;
    for (int t = 0; t < sch.n_c(); ++t) feet.push_back({{fx(rng), fz(rng)}, {fx(rng), fz(rng)}});
    const DiscreteModel model = discretize(feet, sch, robot);
    const ilc::LiftedModel lm = ilc::build_lifted(model, sch);
    ControlSequence u(static_cast<size_t>(sch.n_c())), du = u;
    for (auto& s : u) s = 80.0 * Vec4(f(rng), f(rng), f(rng), f(rng));
    for (auto& s : du) s = 10.0 * Vec4(f(rng), f(rng), f(rng), f(rng));
    ControlSequence u2 = u;
    for (size_t t = 0; t < u.size(); ++t) u2[t] += du[t];
    const Vec6 x0 = (Vec6() << 0.0, 0.2, 0.05, 0.0, 0.0, 0.0).finished();
    const auto x1 = rollout(model, x0, u, sch.n());
    const auto x2 = rollout(model, x0, u2, sch.n());
    std::vector<Vec6> e1, e2;
    for (size_t t = 0; t < x1.size(); ++t) {
      e1.push_back(Vec6::Constant(0.3) - x1[t]);
      e2.push_back(Vec6::Constant(0.3) - x2[t]);
    }
    const auto pred = ilc::predict_error(e1, lm, ilc::stack_inputs(du));
    for (size_t t = 0; t < e2.size(); ++t) worst_pred = std::max(worst_pred, (pred[t] - e2[t]).norm());
    Mat6 a = Mat6::Identity();
    const Eigen::MatrixXd at_nc = lm.row(sch.n_c());
    for (int m = sch.n_c() + 1; m <= sch.n(); ++m) {
      a = model.a_mat * a;
      const Eigen::MatrixXd expect = a * at_nc;
      worst_flight = std::max(worst_flight, (lm.row(m) - expect).norm() / std::max(1.0, expect.norm()));
    }
  }
  verdict(9, "lifted-model identity", worst_pred <= kLiftedTol && worst_flight <= kLiftedTol,
          fmt("prediction %.2e, flight rows %.2e (tol %.0e)", worst_pred, worst_flight, kLiftedTol));
}

void kinematics() {
  const LegGeometry leg{0.2, 0.2};
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> rad(0.02, 0.4), ang(-kPi, kPi), q(-2.0, 2.0);
  double worst_fk = 0.0, worst_j = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double r = rad(rng), a = ang(rng);
    const Vec2 target(r * std::cos(a), r * std::sin(a));
    worst_fk = std::max(worst_fk, (leg_fk_body(leg_ik(target, leg), leg) - target).norm());
    const Vec2 qq(q(rng), q(rng));
    const Mat2 j = leg_jacobian(qq, leg);
    const double h = 1e-7;
    for (int c = 0; c < 2; ++c) {
      Vec2 dq = Vec2::Zero();
      dq(c) = h;
      const Vec2 fd = (leg_fk_body(qq + dq, leg) - leg_fk_body(qq - dq, leg)) / (2 * h);
      worst_j = std::max(worst_j, (fd - j.col(c)).cwiseAbs().maxCoeff());
    }
  }
  verdict(10, "kinematics", worst_fk <= kFkTol && worst_j <= kJacobianTol,
          fmt("FK/IK %.2e (tol %.0e), Jacobian %.2e (tol %.0e)", worst_fk, kFkTol, worst_j,
              kJacobianTol));
}

void actuator() {
  const ActuatorParams act;
  const double at_top = actuator_clamp(act.tau_max, act.qdot_max, act).tau;
  const double braking = actuator_clamp(-act.tau_max, act.qdot_max, act).tau;
  const ActuatorOutput stall = actuator_clamp(10 * act.tau_max, 0.0, act);
  const bool ok = std::abs(at_top) <= 1e-12 && braking < 0.0 && stall.tau == act.tau_max &&
                  std::abs(stall.volts - act.v_bat) <= 1e-12;
  verdict(11, "actuator model", ok,
          fmt("torque at qdot_max %.1e, stall %.2f N m -> %.12f V", at_top, stall.tau, stall.volts));
}

// --- campaigns --------------------------------------------------------------

struct Conformance {
  long samples = 0, bad = 0;
  double tau = 0, volts = 0, cone = 0, pull = 0;

  void add(const ilc::History& h, const ActuatorParams& act, double mu) {
    for (const auto& r : h.trials) {
      const TrialRecord& rec = r.record;
      for (size_t t = 0; t < rec.torques.size(); ++t) {
        ++samples;
        const double tt = rec.torques[t].cwiseAbs().maxCoeff();
        const double vv = rec.voltages[t].cwiseAbs().maxCoeff();
        const Vec4& g = rec.ground[t];
        const double cc = std::max(std::abs(g(0)) - mu * g(1), std::abs(g(2)) - mu * g(3));
        const double pp = std::max(-g(1), -g(3));
        tau = std::max(tau, tt);
        volts = std::max(volts, vv);
        cone = std::max(cone, cc);
        pull = std::max(pull, pp);
        bad += tt > act.tau_max + kConstraintSlack || vv > act.v_bat + kConstraintSlack ||
               cc > kConstraintSlack || pp > kConstraintSlack;
      }
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance campaigns and property checks"};
  Runner run;
  bool properties_only = false;
  app.add_option("--out", run.out, "Also write each campaign's run directory here");
  app.add_flag("-v,--verbose", run.verbose, "Per-trial progress");
  app.add_flag("--properties-only", properties_only, "Skip the learning campaigns");
  CLI11_PARSE(app, argc, argv);

  const auto t_start = std::chrono::steady_clock::now();
  const std::string fwd60 = "target: {x: 0.6, z: 0.0}\n";
  const ilc::Learner P = ilc::Learner::kProposed, M = ilc::Learner::kIlcMpc, D = ilc::Learner::kPdIlc;

  if (!properties_only) {
    const Campaign hard = run.learn("forward60-hard", task("id: forward60-hard\n" + fwd60 + "ground: hard\n", kScratchTrials, P));
    verdict(1, "staged convergence (hard)", converged_within(hard.run.history, kScratchTrials),
            last_error(hard.run.history));

    const Campaign soft = run.learn("forward60-soft", task("id: forward60-soft\n" + fwd60 + "ground: soft\n", kScratchTrials, P));
    verdict(2, "soft ground", converged_within(soft.run.history, kScratchTrials),
            last_error(soft.run.history));

    ex::TaskSpec ps = task("id: forward60-payload\n" + fwd60 + "ground: hard\npayload: {mass: 2.0}\n", kPayloadTrials, P);
    // Only the distance matters here; pitch stays at the default tolerance.
    ps.opt.tol.x = ps.opt.tol.z = kPayloadDistance / std::sqrt(2.0);
    const Campaign payload = run.learn("forward60-payload", ps);
    {
      const auto& h = payload.run.history;
      double best = 1e9;
      int at = 0;
      for (int k = 0; k < h.trial_count(); ++k) {
        const Vec6 e = h.trials[static_cast<size_t>(k)].record.final_error();
        if (std::hypot(e(0), e(1)) < best) best = std::hypot(e(0), e(1)), at = k + 1;
      }
      const Vec6 e = h.last().record.final_error();
      const double last = std::hypot(e(0), e(1));
      verdict(3, "unknown payload", h.converged && last <= kPayloadDistance,
              fmt("%d trials, last distance %.2f cm, best %.2f cm at trial %d", h.trial_count(),
                  100 * last, 100 * best, at));
    }

    const Campaign f40 = run.learn("forward40", task("id: forward40\ntarget: {x: 0.4, z: 0.0}\n", kScratchTrials, P));
    const std::string box_yaml = "id: box50x20\ntarget: {x: 0.5, z: 0.2}\nbox: {height: 0.2}\n";
    const Campaign box = run.learn("box50x20", task(box_yaml, kScratchTrials, P));
    const Campaign t60 = run.transfer("transfer-forward60", task("id: transfer-forward60\n" + fwd60, kTransferTrials, P), f40);
    const Campaign tbox = run.transfer("transfer-box50x20", task(box_yaml, kTransferTrials, P), f40);
    {
      // An unconverged scratch run counts as needing more than its budget.
      auto scratch = [](const ilc::History& h) {
        return h.converged ? h.trial_count() : kScratchTrials + 1;
      };
      auto ok = [&](const ilc::History& t, const ilc::History& s) {
        return converged_within(t, kTransferTrials) && 2 * t.trial_count() <= scratch(s);
      };
      auto desc = [&](const ilc::History& h) {
        return h.converged ? std::to_string(h.trial_count()) : std::string(">") + std::to_string(h.trial_count());
      };
      const bool good = ok(t60.run.history, hard.run.history) && ok(tbox.run.history, box.run.history);
      verdict(4, "transfer efficiency", good,
              fmt("0.4 m source %s; 0.6 m transfer %s vs scratch %s; box transfer %s vs scratch %s",
                  f40.run.history.converged ? "converged" : "NOT converged",
                  desc(t60.run.history).c_str(), desc(hard.run.history).c_str(),
                  desc(tbox.run.history).c_str(), desc(box.run.history).c_str()));
    }

    const Campaign mpc_hard = run.learn("forward60-hard-ilc-mpc", task("id: forward60-hard\n" + fwd60 + "ground: hard\n", kScratchTrials, M));
    const Campaign mpc_soft = run.learn("forward60-soft-ilc-mpc", task("id: forward60-soft\n" + fwd60 + "ground: soft\n", kScratchTrials, M));
    const Campaign mpc_payload = run.learn("forward60-payload-ilc-mpc", task("id: forward60-payload\n" + fwd60 + "payload: {mass: 2.0}\n", kPayloadTrials, M));
    {
      const int staged = bad_landings(hard.run.history) + bad_landings(soft.run.history) +
                         bad_landings(payload.run.history);
      const int mpc = bad_landings(mpc_hard.run.history) + bad_landings(mpc_soft.run.history) +
                      bad_landings(mpc_payload.run.history);
      verdict(5, "safety ordering", staged == 0 && mpc >= 1,
              fmt("|theta_N| > %.0f deg: staged %d, ILC-MPC %d", kBadLandingDeg, staged, mpc));
    }

    ex::TaskSpec pd_spec = task("id: forward60-hard\n" + fwd60 + "ground: hard\n", kPdTrials, D);
    const Campaign pd = run.learn("forward60-hard-pd-ilc", pd_spec);

    const std::vector<const Campaign*> campaigns{&hard, &soft, &payload, &f40, &box, &t60, &tbox,
                                                 &mpc_hard, &mpc_soft, &mpc_payload, &pd};
    {
      Conformance c;
      for (const Campaign* k : campaigns) c.add(k->run.history, k->spec.task.actuator, k->spec.task.ground.mu);
      verdict(6, "constraint conformance", c.bad == 0 && c.samples > 0,
              fmt("%ld/%ld samples violate; max |tau| %.2f N m, |v| %.2f V, cone excess %.1e N, pull %.1e N",
                  c.bad, c.samples, c.tau, c.volts, c.cone, c.pull));
    }
    {
      double worst = 0.0;
      long n = 0, solves = 0;
      for (const Campaign* k : campaigns) {
        for (const auto& r : k->run.history.trials) {
          if (!r.updated) continue;
          ++solves;
          worst = std::max(worst, r.update.qp_seconds);
          n = std::max<long>(n, 4L * static_cast<long>(r.update.du.size()));
        }
      }
      verdict(7, "QP speed", solves > 0 && worst < kQpSeconds,
              fmt("%ld solves, n = %ld, slowest %.3f s (limit %.1f s)", solves, n, worst, kQpSeconds));
    }
    {
      const auto& h = pd.run.history;
      const double eps0 = h.trials.front().joint_error;
      const double eps_last = h.trials[std::min<size_t>(kPdTrials, h.trials.size()) - 1].joint_error;
      const Vec6 ep = h.last().record.final_error();
      const Vec6 es = hard.run.history.last().record.final_error();
      const double dp = std::hypot(ep(0), ep(1)), ds = std::hypot(es(0), es(1));
      const bool drop = eps_last <= (1.0 - kPdDrop) * eps0;
      verdict(12, "PD-type baseline", drop && dp > ds,
              fmt("eps %.4f -> %.4f rad (%.0f%% drop over %d trials); distance error pd-ilc %.2f cm vs staged %.2f cm",
                  eps0, eps_last, 100 * (1 - eps_last / eps0), h.trial_count(), 100 * dp, 100 * ds));
    }
  }

  qp_oracle();
  lifted_identity();
  kinematics();
  actuator();

  std::printf("%d criteria failed, %.0f s\n", failures,
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count());
  return failures == 0 ? 0 : 1;
}
