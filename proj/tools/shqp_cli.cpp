// Copyright 2026 The SHQP Authors
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

// Command-line front end: run, sweep, list, validate-config.
//
//   shqp_cli run --problem backtrack-example --algorithm mass --x0 0,1,0
//   shqp_cli sweep --problem circle-line --algorithm memory-shqp --tau 0.2,0.1,0.05 --out-dir out
//
// Flags override the values of --config. Exit codes: 0 converged,
// 2 max-iterations, 3 fallback exhausted, 64 usage, 70 internal, 74 I/O.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "shqp/shqp.hpp"

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::string> problem;
  std::optional<std::string> algorithm;
  std::optional<std::string> x0;
  std::optional<double> x0_radius;
  std::vector<double> tau;
  std::vector<int> pbar;
  std::vector<std::uint64_t> seed;
  std::optional<int> max_iters;
  std::optional<double> tol;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;
  std::optional<std::string> merit;
  std::optional<std::string> pairing;
  std::optional<std::string> fallback;
  std::optional<int> jobs;
  bool relax_convex = false;
  bool timing = false;
};

void AddFlags(CLI::App* app, Flags& f, bool sweep) {
  app->add_option("--config", f.config_path, "JSON config file");
  app->add_option("--problem", f.problem, "gallery problem name");
  app->add_option("--algorithm", f.algorithm,
                  "map|basic-shqp|mass|memory-shqp|two-shqp|averaged|global");
  app->add_option("--x0", f.x0, "start point, comma separated");
  app->add_option("--x0-radius", f.x0_radius,
                  "seeded random start in B(known solution, r)");
  const char* axis = sweep ? " (comma-separated grid)" : "";
  app->add_option("--tau", f.tau, std::string("relaxation") + axis)
      ->delimiter(',')
      ->expected(sweep ? -1 : 1);
  app->add_option("--pbar", f.pbar, std::string("memory length") + axis)
      ->delimiter(',')
      ->expected(sweep ? -1 : 1);
  app->add_option("--seed", f.seed, std::string("rng seed") + axis)
      ->delimiter(',')
      ->expected(sweep ? -1 : 1);
  app->add_option("--max-iters", f.max_iters, "outer iteration cap");
  app->add_option("--tol", f.tol, "stop when every d(x, K_l) <= tol");
  app->add_option("--out-dir", f.out_dir, "output directory");
  app->add_option("--format", f.format, "csv|json");
  app->add_option("--merit", f.merit,
                  "global merit: sum-of-squares|max-distance|intersection-distance");
  app->add_option("--pairing", f.pairing, "basic-shqp pairing: fixed|latest");
  app->add_option("--fallback", f.fallback, "ladder|drop-oldest|none");
  app->add_flag("--relax-convex", f.relax_convex,
                "apply tau to convex sources too");
  app->add_flag("--timing", f.timing, "record wallclock_ms in the report");
  if (sweep) app->add_option("--jobs", f.jobs, "worker threads (0: all cores)");
}

shqp::Vector ParseVector(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double d = 0.0;
    try {
      d = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw shqp::Error(shqp::ErrorCode::kInvalidArgument,
                        "$.x0: cannot parse '" + item + "' as a number");
    }
    v.push_back(d);
  }
  if (v.empty()) {
    throw shqp::Error(shqp::ErrorCode::kInvalidArgument, "$.x0: empty vector");
  }
  return Eigen::Map<shqp::Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

shqp::ExperimentConfig Build(const Flags& f, bool sweep) {
  shqp::ExperimentConfig cfg;
  if (!f.config_path.empty()) {
    std::ifstream is(f.config_path);
    if (!is) {
      throw shqp::Error(shqp::ErrorCode::kInvalidArgument,
                        "$: cannot open " + f.config_path);
    }
    shqp::Json j;
    try {
      j = shqp::Json::parse(is);
    } catch (const shqp::Json::parse_error& e) {
      throw shqp::Error(shqp::ErrorCode::kInvalidArgument,
                        std::string("$: ") + e.what());
    }
    cfg = shqp::ParseConfig(j);
  }
  if (f.problem) cfg.problem = *f.problem;
  if (f.algorithm) cfg.algorithm = *f.algorithm;
  if (f.x0) {
    cfg.x0 = ParseVector(*f.x0);
    cfg.x0_radius.reset();
  }
  if (f.x0_radius) {
    cfg.x0_radius = *f.x0_radius;
    cfg.x0.reset();
  }
  if (sweep) {
    if (!f.tau.empty()) cfg.tau_grid = f.tau;
    if (!f.pbar.empty()) cfg.pbar_grid = f.pbar;
    if (!f.seed.empty()) cfg.seed_grid = f.seed;
  } else {
    if (!f.tau.empty()) cfg.tau = f.tau.front();
    if (!f.pbar.empty()) cfg.pbar = f.pbar.front();
    if (!f.seed.empty()) cfg.seed = f.seed.front();
  }
  if (f.max_iters) cfg.max_iters = *f.max_iters;
  if (f.tol) cfg.tol = *f.tol;
  if (f.out_dir) cfg.out_dir = *f.out_dir;
  if (f.format) cfg.format = *f.format;
  if (f.merit) {
    auto m = shqp::MeritFromString(*f.merit);
    if (!m) throw shqp::Error(shqp::ErrorCode::kInvalidArgument, "$.merit: unknown merit");
    cfg.merit = *m;
  }
  if (f.pairing) {
    if (*f.pairing == "fixed") {
      cfg.pairing = shqp::Pairing::kFixed;
    } else if (*f.pairing == "latest") {
      cfg.pairing = shqp::Pairing::kLatest;
    } else {
      throw shqp::Error(shqp::ErrorCode::kInvalidArgument,
                        "$.pairing: expected 'fixed' or 'latest'");
    }
  }
  if (f.fallback) {
    auto p = shqp::FallbackFromString(*f.fallback);
    if (!p) {
      throw shqp::Error(shqp::ErrorCode::kInvalidArgument,
                        "$.fallback: unknown fallback policy");
    }
    cfg.fallback = *p;
  }
  if (f.jobs) cfg.jobs = *f.jobs;
  if (f.relax_convex) cfg.relax_convex_sets = true;
  if (f.timing) cfg.timing = true;
  return cfg;
}

// Parses and validates; prints the error and returns nullopt on failure.
std::optional<shqp::ExperimentConfig> Load(const Flags& f, bool sweep) {
  try {
    shqp::ExperimentConfig cfg = Build(f, sweep);
    if (sweep && !cfg.tau_grid && !cfg.pbar_grid && !cfg.seed_grid) {
      throw shqp::Error(shqp::ErrorCode::kInvalidArgument,
                        "$.grid: sweep needs at least one grid axis");
    }
    shqp::ValidateConfig(cfg);
    return cfg;
  } catch (const shqp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return std::nullopt;
  }
}

int Run(const Flags& f) {
  const auto cfg = Load(f, false);
  if (!cfg) return shqp::kExitUsage;
  shqp::RunResult r;
  try {
    r = shqp::RunExperiment(*cfg);
  } catch (const shqp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return shqp::kExitSoftware;
  }
  try {
    const shqp::ResolvedProblem rp = shqp::ResolveProblem(*cfg);
    shqp::WriteRunOutputs(*cfg, r, rp.problem.size());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return shqp::kExitIo;
  }
  std::cout << "status=" << shqp::ToString(r.trace.status)
            << " outer_iterations=" << r.trace.outer_iterations
            << " records=" << r.trace.records.size()
            << " out_dir=" << cfg->out_dir << "\n";
  return r.exit_code;
}

int Sweep(const Flags& f) {
  const auto cfg = Load(f, true);
  if (!cfg) return shqp::kExitUsage;
  shqp::SweepResult s;
  try {
    s = shqp::RunSweep(*cfg);
  } catch (const shqp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return shqp::kExitSoftware;
  }
  try {
    shqp::WriteSweepOutputs(*cfg, s);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return shqp::kExitIo;
  }
  std::cout << shqp::SweepCsv(s);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feasibility experiments with supporting-halfspace QP methods"};
  app.require_subcommand(1);
  Flags run_flags, sweep_flags, check_flags;
  CLI::App* run = app.add_subcommand("run", "run one experiment");
  AddFlags(run, run_flags, false);
  CLI::App* sweep = app.add_subcommand("sweep", "run a (tau, pbar, seed) grid");
  AddFlags(sweep, sweep_flags, true);
  app.add_subcommand("list", "list gallery problems");
  CLI::App* check =
      app.add_subcommand("validate-config", "check a config without running it");
  AddFlags(check, check_flags, false);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return shqp::kExitUsage;
  }
  if (app.got_subcommand("run")) return Run(run_flags);
  if (app.got_subcommand("sweep")) return Sweep(sweep_flags);
  if (app.got_subcommand("list")) {
    std::cout << shqp::GalleryTable();
    return 0;
  }
  if (!Load(check_flags, false)) return shqp::kExitUsage;
  std::cout << "ok\n";
  return 0;
}
