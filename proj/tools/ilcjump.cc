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


// ilcjump: learn, transfer, compare and sweep jump tasks.
//
// Exit codes: 0 done, 1 a trial diverged, 2 bad usage or task file,
// 3 transfer source refused, 4 other runtime failure.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "ilcjump/experiment/campaign.hpp"

namespace ex = ilcjump::experiment;
namespace ilc = ilcjump::ilc;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0, kDiverged = 1, kUsage = 2, kRefused = 3, kRuntime = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string task_file;
  std::string out;
  int max_trials = 0;
  bool seedless = false;
  std::string flight_model;
  bool quiet = false;
};

ex::TaskSpec load(const Common& c) {
  ex::TaskSpec s = ex::load_task_file(c.task_file);
  if (c.max_trials > 0) s.opt.max_trials = c.max_trials;
  if (!c.flight_model.empty()) {
    try {
      s.opt.flight = ilc::parse_flight_model(c.flight_model);
    } catch (const ilcjump::ModelInputError& e) {
      throw UsageError(e.what());
    }
  }
  return s;
}

fs::path out_dir(const Common& c, const ex::TaskSpec& s, const std::string& suffix = "") {
  fs::path p = c.out.empty() ? fs::path("runs") / s.task.id : fs::path(c.out);
  return suffix.empty() ? p : p / suffix;
}

ilc::TrialCallback progress(const Common& c, const std::string& tag) {
  if (c.quiet) return {};
  return [tag](const ilc::TrialResult& r) {
    const auto e = r.record.final_error();
    std::fprintf(stderr, "[%s] trial %2d stage %d  e = (%6.2f cm, %6.2f cm, %7.2f deg)%s%s\n",
                 tag.c_str(), r.record.meta.trial + 1, r.record.meta.stage, 100 * e(0),
                 100 * e(1), ilcjump::rad2deg(e(2)), r.record.flags.bad_landing ? " bad-landing" : "",
                 r.within_tol ? " ok" : "");
  };
}

void report(const fs::path& dir, const ilc::History& h) {
  std::cout << dir.string() << ": " << ilc::learner_name(h.learner) << ", "
            << h.trial_count() << " trials, " << (h.converged ? "converged" : "not converged")
            << "\n";
}

int finish(const ilc::History& h) { return ex::diverged(h) ? kDiverged : kOk; }

int cmd_learn(const Common& c) {
  const ex::TaskSpec s = load(c);
  const fs::path dir = out_dir(c, s);
  const ex::RunResult r = ex::learn(s, nullptr, progress(c, s.task.id));
  ex::write_run(dir, s, r.history, r.refs, c.seedless);
  report(dir, r.history);
  return finish(r.history);
}

int cmd_transfer(const Common& c, const std::string& from) {
  const ex::TaskSpec s = load(c);
  const ex::LearnedRun src = ex::load_learned(from);
  if (!src.converged) {
    std::cerr << "refusing to transfer: source run " << from << " did not converge\n";
    return kRefused;
  }
  const fs::path dir = out_dir(c, s);
  const ex::RunResult r = ex::transfer(s, src, progress(c, s.task.id));
  ex::write_run(dir, s, r.history, r.refs, c.seedless);
  report(dir, r.history);
  return finish(r.history);
}

// Runs jobs on up to hardware_concurrency threads; each job owns its output.
template <typename F>
void parallel_for(size_t n, F&& job) {
  const size_t workers = std::max<size_t>(1, std::min<size_t>(n, std::thread::hardware_concurrency()));
  std::atomic<size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_compare(const Common& c, const std::string& learners) {
  const ex::TaskSpec base = load(c);
  std::vector<ex::TaskSpec> specs;
  for (const auto& name : split(learners)) {
    ex::TaskSpec s = base;
    try {
      s.opt.learner = ilc::parse_learner(name);
    } catch (const ilcjump::ModelInputError& e) {
      throw UsageError(e.what());
    }
    specs.push_back(s);
  }
  if (specs.empty()) throw UsageError("--learners: empty learner list");
  ex::ReferenceCache cache;
  cache.get(base);  // build once before the workers start
  std::vector<ex::RunResult> results(specs.size());
  parallel_for(specs.size(), [&](size_t i) {
    results[i] = ex::learn(specs[i], &cache, progress(c, ilc::learner_name(specs[i].opt.learner)));
  });
  std::vector<ilc::History> hs;
  int code = kOk;
  for (size_t i = 0; i < specs.size(); ++i) {
    const fs::path dir = out_dir(c, base, ilc::learner_name(specs[i].opt.learner));
    ex::write_run(dir, specs[i], results[i].history, results[i].refs, c.seedless);
    hs.push_back(results[i].history);
    code = std::max(code, finish(results[i].history));
  }
  const std::string table = ex::comparison_table(hs);
  ex::write_text(out_dir(c, base) / "comparison.tsv", table);
  std::cout << table;
  return code;
}

int cmd_sweep(const Common& c, const std::string& param, const std::string& values) {
  const ex::TaskSpec base = load(c);
  std::vector<std::string> tokens = split(values);
  if (tokens.empty()) throw UsageError("--values: empty list");
  std::vector<ex::TaskSpec> specs;
  for (const auto& tok : tokens) {
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw UsageError("--values: '" + tok + "' is not a number");
    try {
      specs.push_back(ex::with_value(base, param, v));
    } catch (const ilcjump::TaskFileError& e) {
      throw UsageError(std::string("--param: ") + e.what());
    }
  }
  ex::ReferenceCache cache;
  std::vector<ex::RunResult> results(specs.size());
  parallel_for(specs.size(), [&](size_t i) {
    results[i] = ex::learn(specs[i], &cache, progress(c, param + "=" + tokens[i]));
  });
  nlohmann::json index = nlohmann::json::array();
  int code = kOk;
  for (size_t i = 0; i < specs.size(); ++i) {
    const std::string name = param + "=" + tokens[i];
    const fs::path dir = out_dir(c, base, name);
    ex::write_run(dir, specs[i], results[i].history, results[i].refs, c.seedless);
    index.push_back({{"param", param},
                     {"value", tokens[i]},
                     {"run_dir", name},
                     {"converged", results[i].history.converged},
                     {"trial_count", results[i].history.trial_count()}});
    report(dir, results[i].history);
    code = std::max(code, finish(results[i].history));
  }
  ex::write_text(out_dir(c, base) / "index.json", index.dump(2) + "\n");
  return code;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("taskfile", c.task_file, "Task file (YAML)")->required();
  sub->add_option("--out", c.out, "Output directory (default runs/<task id>)");
  sub->add_option("--max-trials", c.max_trials, "Override max_trials")->check(CLI::PositiveNumber);
  sub->add_flag("--seedless", c.seedless, "Record that the run used no random numbers");
  sub->add_option("--flight-error-model", c.flight_model, "frozen or propagated")
      ->check(CLI::IsMember({"frozen", "propagated"}));
  sub->add_flag("-q,--quiet", c.quiet, "No per-trial progress");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Staged iterative learning control for quadruped jumps"};
  app.require_subcommand(1);
  Common c;
  std::string from, learners, param, values;
  auto* learn = app.add_subcommand("learn", "Learn a task from scratch");
  add_common(learn, c);
  auto* transfer = app.add_subcommand("transfer", "Learn a task seeded by a converged run");
  add_common(transfer, c);
  transfer->add_option("--from", from, "Run directory of the source task")->required();
  auto* compare = app.add_subcommand("compare", "Run several learners on one task");
  add_common(compare, c);
  compare->add_option("--learners", learners, "Comma-separated: proposed,pd-ilc,ilc-mpc")
      ->required();
  auto* sweep = app.add_subcommand("sweep", "One run per value of a task parameter");
  add_common(sweep, c);
  sweep->add_option("--param", param, "Dotted task-file path, e.g. ground.k_p")->required();
  sweep->add_option("--values", values, "Comma-separated numbers")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*learn) return cmd_learn(c);
    if (*transfer) return cmd_transfer(c, from);
    if (*compare) return cmd_compare(c, learners);
    if (*sweep) return cmd_sweep(c, param, values);
  } catch (const ilcjump::TaskFileError& e) {
    std::cerr << "task file error: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
