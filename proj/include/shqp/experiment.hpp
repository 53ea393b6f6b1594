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

// Experiment execution: single runs with a report, and parameter sweeps
// over (tau, pbar, seed) cells run on a worker pool.

#ifndef SHQP_EXPERIMENT_HPP_
#define SHQP_EXPERIMENT_HPP_

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "shqp/config.hpp"
#include "shqp/diagnostics.hpp"
#include "shqp/gallery.hpp"
#include "shqp/solvers.hpp"
#include "shqp/trace_io.hpp"

namespace shqp {

// sysexits-style codes.
inline constexpr int kExitConverged = 0;
inline constexpr int kExitMaxIterations = 2;
inline constexpr int kExitFallbackExhausted = 3;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitSoftware = 70;
inline constexpr int kExitIo = 74;

inline int ExitCodeFor(TerminalStatus s) {
  switch (s) {
    case TerminalStatus::kConverged:
      return kExitConverged;
    case TerminalStatus::kMaxIterations:
      return kExitMaxIterations;
    case TerminalStatus::kFallbackExhausted:
      return kExitFallbackExhausted;
  }
  return kExitSoftware;
}

inline SolverConfig ToSolverConfig(const ExperimentConfig& cfg) {
  SolverConfig s;
  s.tau_schedule = SolverConfig::ConstantTau(cfg.tau);
  s.relax_convex_sets = cfg.relax_convex_sets;
  s.memory = cfg.pbar;
  s.max_outer_iterations = cfg.max_iters;
  s.stop_tolerance = cfg.tol;
  s.fallback = cfg.fallback;
  s.rng_seed = cfg.seed;
  return s;
}

inline Trace Dispatch(const ExperimentConfig& cfg, const ProblemInstance& p,
                      const Vector& x0) {
  const SolverConfig s = ToSolverConfig(cfg);
  const std::string& a = cfg.algorithm;
  if (a == "map") return RunMap(p, x0, s);
  if (a == "basic-shqp") {
    return RunBasicShqp(p, x0, Schedule::Cyclic(p.size(), cfg.pairing), s);
  }
  if (a == "mass") return RunMassProjection(p, x0, s);
  if (a == "memory-shqp") return RunMemoryShqp(p, x0, s);
  if (a == "two-shqp") return RunTwoShqp(p, x0, s);
  if (a == "averaged") return RunAveragedProjections(p, x0, s);
  if (a == "global") return RunGlobal(p, x0, cfg.merit, s);
  throw Error(ErrorCode::kInvalidArgument,
              "$.algorithm: unknown algorithm '" + a + "'");
}

inline Json RateReportJson(const ProblemInstance& p, const Trace& trace,
                           int pbar) {
  Json j;
  try {
    const RateReport r = AnalyzeTrace(trace, TraceLimit(p, trace), std::max(1, pbar));
    j["usable_errors"] = r.errors.size();
    j["tail_qlinear_rate"] = r.tail_qlinear_rate;
    j["estimated_order"] =
        std::isfinite(r.estimated_order) ? Json(r.estimated_order) : Json();
    j["fejer_ok"] = r.fejer_ok;
    j["pbar"] = r.pbar;
    j["tail_pbar_ratio"] = r.tail_pbar_ratio ? Json(*r.tail_pbar_ratio) : Json();
    j["q_ratios"] = r.q_ratios;
    j["limit"] = p.known_solution ? "known_solution" : "final_iterate";
  } catch (const Error& e) {
    j["error"] = std::string(e.what());
  }
  return j;
}

struct RegularityInfo {
  Json json;
  // Declared beta when the gallery has one, else the estimate.
  std::optional<double> beta;
};

inline RegularityInfo RegularityFor(const ResolvedProblem& rp,
                                    std::uint64_t seed) {
  RegularityInfo out;
  if (!rp.problem.known_solution) {
    out.json["error"] = "no known solution to estimate at";
    return out;
  }
  try {
    const RegularityEstimate est = EstimateRegularity(
        rp.problem, *rp.problem.known_solution, {0.01}, 500, seed);
    out.json["radius"] = 0.01;
    out.json["beta_hat"] = est.beta_hat;
    out.json["beta_from_proxy"] = est.beta_from_proxy;
    out.json["eta_hat"] = est.eta_hat;
    Json profile = Json::object();
    for (const auto& [r, d] : est.delta_profile) {
      profile[Exact(r)] = d ? Json(*d) : Json();
    }
    out.json["delta_profile"] = profile;
    out.json["sosh_m_hat"] = est.sosh_m_hat ? Json(*est.sosh_m_hat) : Json();
    out.beta = est.beta_hat;
  } catch (const Error& e) {
    out.json["error"] = std::string(e.what());
  }
  if (rp.meta && rp.meta->beta) {
    out.json["beta_declared"] = *rp.meta->beta;
    out.beta = *rp.meta->beta;
  }
  if (rp.meta && rp.meta->eta) out.json["eta_declared"] = *rp.meta->eta;
  return out;
}

inline Json BoundsJson(int m, std::optional<double> beta, double tau) {
  Json j;
  if (!beta) {
    j["error"] = "no beta available";
    return j;
  }
  const PredictedBounds b = PredictBounds(m, std::max(1.0, *beta), tau);
  j["beta_used"] = std::max(1.0, *beta);
  j["rho"] = b.rho_thm36;
  j["c"] = b.c_thm36;
  j["bound_vacuous"] = b.bound_vacuous;
  j["rho_tau"] = b.rho_lem52;
  j["l_tau"] = b.l_lem52;
  j["rho_bar"] = b.rho_bar;
  j["l_bar"] = b.l_bar;
  j["contraction_8ltau"] = b.contraction_8ltau;
  return j;
}

struct RunResult {
  Vector x0;
  Trace trace;
  Json report;
  int exit_code = kExitConverged;
};

// Runs one experiment without touching the file system.
inline RunResult RunExperiment(const ExperimentConfig& cfg) {
  ValidateConfig(cfg);
  const ResolvedProblem rp = ResolveProblem(cfg);
  RunResult out;
  out.x0 = ResolveStart(cfg, rp);
  const auto start = std::chrono::steady_clock::now();
  out.trace = Dispatch(cfg, rp.problem, out.x0);
  const auto stop = std::chrono::steady_clock::now();
  out.exit_code = ExitCodeFor(out.trace.status);

  Json& r = out.report;
  r["config_echo"] = ConfigToJson(cfg);
  r["config_echo"]["x0_resolved"] = VectorJson(out.x0);
  r["terminal_status"] = ToString(out.trace.status);
  r["counters"] = {{"outer_iterations", out.trace.outer_iterations},
                   {"records", out.trace.records.size()},
                   {"copy_steps", out.trace.copy_steps},
                   {"fallback_events", out.trace.fallback_events}};
  r["rate_report"] = RateReportJson(rp.problem, out.trace, cfg.pbar);
  const RegularityInfo reg = RegularityFor(rp, cfg.seed);
  r["regularity_estimate"] = reg.json;
  r["predicted_bounds"] = BoundsJson(rp.problem.size(), reg.beta, cfg.tau);
  if (cfg.timing) {
    r["wallclock_ms"] =
        std::chrono::duration<double, std::milli>(stop - start).count();
  } else {
    r["wallclock_ms"] = nullptr;
  }
  return out;
}

inline void WriteFile(const std::filesystem::path& path,
                      const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os << text;
  if (!os) throw std::runtime_error("cannot write " + path.string());
}

// trace.csv (or trace.json) and report.json under cfg.out_dir.
inline void WriteRunOutputs(const ExperimentConfig& cfg, const RunResult& r,
                            int m) {
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  if (cfg.format == "json") {
    WriteFile(dir / "trace.json", TraceJson(r.trace).dump(1) + "\n");
  } else {
    WriteFile(dir / "trace.csv", TraceCsv(r.trace, m));
  }
  WriteFile(dir / "report.json", r.report.dump(2) + "\n");
}

struct SweepRow {
  double tau = 0.0;
  int pbar = 0;
  std::uint64_t seed = 0;
  std::string status;
  int outer_iterations = 0;
  std::optional<double> tail_qlinear_rate;
  std::optional<double> tail_pbar_ratio;
  std::optional<double> estimated_order;
  std::optional<double> predicted_8ltau;
  bool fejer_ok = true;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::optional<double> beta;
};

inline SweepRow RunCell(const ExperimentConfig& cell, const ResolvedProblem& rp,
                        std::optional<double> beta) {
  SweepRow row;
  row.tau = cell.tau;
  row.pbar = cell.pbar;
  row.seed = cell.seed;
  try {
    if (beta) {
      row.predicted_8ltau =
          PredictBounds(rp.problem.size(), std::max(1.0, *beta), cell.tau)
              .contraction_8ltau;
    }
    const Vector x0 = ResolveStart(cell, rp);
    const Trace trace = Dispatch(cell, rp.problem, x0);
    row.status = ToString(trace.status);
    row.outer_iterations = trace.outer_iterations;
    const RateReport rr = AnalyzeTrace(trace, TraceLimit(rp.problem, trace),
                                       std::max(1, cell.pbar));
    row.tail_qlinear_rate = rr.tail_qlinear_rate;
    row.tail_pbar_ratio = rr.tail_pbar_ratio;
    if (std::isfinite(rr.estimated_order)) row.estimated_order = rr.estimated_order;
    row.fejer_ok = rr.fejer_ok;
  } catch (const Error& e) {
    if (row.status.empty()) row.status = "error";
    row.error = std::string(e.what());
  } catch (const std::exception& e) {
    row.status = "error";
    row.error = e.what();
  }
  return row;
}

// Cells in row-major (tau, pbar, seed) order. Workers fill fixed slots; the
// rows come back in cell order regardless of scheduling.
inline SweepResult RunSweep(const ExperimentConfig& cfg) {
  if (!cfg.tau_grid && !cfg.pbar_grid && !cfg.seed_grid) {
    throw Error(ErrorCode::kInvalidArgument,
                "$.grid: sweep needs at least one nonempty grid axis");
  }
  ValidateConfig(cfg);
  const ResolvedProblem rp = ResolveProblem(cfg);
  const std::vector<double> taus = cfg.tau_grid.value_or(std::vector<double>{cfg.tau});
  const std::vector<int> pbars = cfg.pbar_grid.value_or(std::vector<int>{cfg.pbar});
  const std::vector<std::uint64_t> seeds =
      cfg.seed_grid.value_or(std::vector<std::uint64_t>{cfg.seed});
  std::vector<ExperimentConfig> cells;
  for (double t : taus) {
    for (int p : pbars) {
      for (std::uint64_t s : seeds) {
        ExperimentConfig c = cfg;
        c.tau = t;
        c.pbar = p;
        c.seed = s;
        cells.push_back(std::move(c));
      }
    }
  }
  SweepResult out;
  out.beta = RegularityFor(rp, cfg.seed).beta;
  out.rows.resize(cells.size());
  unsigned jobs = cfg.jobs > 0 ? static_cast<unsigned>(cfg.jobs)
                               : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(cells.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      out.rows[i] = RunCell(cells[i], rp, out.beta);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < jobs; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

inline std::string OptionalCell(const std::optional<double>& v) {
  return v ? Exact(*v) : std::string();
}

inline std::string CsvQuote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

inline std::string SweepCsv(const SweepResult& s) {
  std::ostringstream os;
  os << "tau,pbar,seed,status,outer_iterations,tail_qlinear_rate,"
        "tail_pbar_ratio,estimated_order,predicted_8ltau,fejer_ok,error\n";
  for (const auto& r : s.rows) {
    os << Exact(r.tau) << ',' << r.pbar << ',' << r.seed << ',' << r.status
       << ',' << r.outer_iterations << ',' << OptionalCell(r.tail_qlinear_rate)
       << ',' << OptionalCell(r.tail_pbar_ratio) << ','
       << OptionalCell(r.estimated_order) << ','
       << OptionalCell(r.predicted_8ltau) << ','
       << (r.fejer_ok ? "true" : "false") << ',' << CsvQuote(r.error) << '\n';
  }
  return os.str();
}

inline Json SweepJson(const SweepResult& s) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(); };
  Json rows = Json::array();
  for (const auto& r : s.rows) {
    rows.push_back({{"tau", r.tau},
                    {"pbar", r.pbar},
                    {"seed", r.seed},
                    {"status", r.status},
                    {"outer_iterations", r.outer_iterations},
                    {"tail_qlinear_rate", opt(r.tail_qlinear_rate)},
                    {"tail_pbar_ratio", opt(r.tail_pbar_ratio)},
                    {"estimated_order", opt(r.estimated_order)},
                    {"predicted_8ltau", opt(r.predicted_8ltau)},
                    {"fejer_ok", r.fejer_ok},
                    {"error", r.error.empty() ? Json() : Json(r.error)}});
  }
  return {{"beta", opt(s.beta)}, {"rows", rows}};
}

inline void WriteSweepOutputs(const ExperimentConfig& cfg,
                              const SweepResult& s) {
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  if (cfg.format == "json") {
    WriteFile(dir / "sweep.json", SweepJson(s).dump(2) + "\n");
  } else {
    WriteFile(dir / "sweep.csv", SweepCsv(s));
  }
}

// name, m, n and flags, in gallery order.
inline std::string GalleryTable() {
  std::ostringstream os;
  os << "name,m,n,convex,manifolds,sosh,beta,eta\n";
  for (const auto& e : Gallery()) {
    os << e.name << ',' << e.problem.size() << ',' << e.problem.dimension()
       << ',' << (e.meta.convex ? "yes" : "no") << ','
       << (e.meta.manifolds ? "yes" : "no") << ','
       << (e.meta.sosh ? "yes" : "no") << ',' << OptionalCell(e.meta.beta)
       << ',' << OptionalCell(e.meta.eta) << '\n';
  }
  return os.str();
}

}  // namespace shqp

#endif  // SHQP_EXPERIMENT_HPP_
