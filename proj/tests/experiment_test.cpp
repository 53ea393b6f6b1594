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

#include "shqp/experiment.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "shqp/config.hpp"
#include "shqp/trace_io.hpp"
#include "test_util.hpp"

namespace shqp {
namespace {

using testing_util::Vec;

// Returns the message of the Error thrown by f, or "" when none is thrown.
template <typename F>
std::string ErrorOf(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

bool Contains(const std::string& s, const std::string& part) {
  return s.find(part) != std::string::npos;
}

Json ParallelLines() {
  return Json::parse(R"({
    "sets": [{"kind": "hyperplane", "normal": [0, 1], "offset": 0},
             {"kind": "hyperplane", "normal": [0, 1], "offset": 1}]})");
}

TEST(ConfigTest, DefaultsParseFromAnEmptyObject) {
  const ExperimentConfig c = ParseConfig(Json::object());
  EXPECT_EQ(c.problem, "backtrack-example");
  EXPECT_EQ(c.algorithm, "mass");
  EXPECT_EQ(c.pbar, 1);
  EXPECT_NO_THROW(ValidateConfig(c));
}

TEST(ConfigTest, ErrorsCarryJsonPaths) {
  const Json bad_normal = Json::parse(R"({"problem": {"sets": [
      {"kind": "halfspace", "normal": [1, 0], "offset": 0},
      {"kind": "halfspace", "normal": "up", "offset": 0}]}})");
  EXPECT_TRUE(Contains(ErrorOf([&] { ValidateConfig(ParseConfig(bad_normal)); }),
                       "$.problem.sets[1].normal"));
  const Json bad_entry = Json::parse(R"({"problem": {"sets": [
      {"kind": "ball", "center": [0, "x"], "radius": 1}]}})");
  EXPECT_TRUE(Contains(ErrorOf([&] { ValidateConfig(ParseConfig(bad_entry)); }),
                       "$.problem.sets[0].center[1]"));
  const Json bad_kind = Json::parse(R"({"problem": {"sets": [{"kind": "cone"}]}})");
  EXPECT_TRUE(Contains(ErrorOf([&] { ValidateConfig(ParseConfig(bad_kind)); }),
                       "$.problem.sets[0].kind"));
  const Json mixed = Json::parse(R"({"problem": {"sets": [
      {"kind": "hyperplane", "normal": [1, 0], "offset": 0},
      {"kind": "hyperplane", "normal": [1, 0, 0], "offset": 0}]}})");
  EXPECT_TRUE(Contains(ErrorOf([&] { ValidateConfig(ParseConfig(mixed)); }),
                       "$.problem.sets[1]"));
  const Json nested = Json::parse(R"({"problem": {"sets": [{"kind": "union",
      "members": [{"kind": "line", "point": [0, 0]}]}]}})");
  EXPECT_TRUE(Contains(ErrorOf([&] { ValidateConfig(ParseConfig(nested)); }),
                       "$.problem.sets[0].members[0]"));
  EXPECT_TRUE(Contains(ErrorOf([] { ParseConfig(Json::parse(R"({"tua": 0.1})")); }),
                       "$.tua"));
  EXPECT_TRUE(Contains(ErrorOf([] { ParseConfig(Json::parse(R"({"pbar": 1.5})")); }),
                       "$.pbar"));
  // Library errors raised while building a set are located too.
  const Json zero = Json::parse(R"({"problem": {"sets": [
      {"kind": "hyperplane", "normal": [0, 0], "offset": 0}]}})");
  EXPECT_TRUE(Contains(ErrorOf([&] { ValidateConfig(ParseConfig(zero)); }),
                       "$.problem.sets[0]"));
}

TEST(ConfigTest, AlgorithmRequirementsAreCheckedBeforeRunning) {
  ExperimentConfig c;
  c.algorithm = "memory-shqp";
  c.pbar = 0;
  EXPECT_TRUE(Contains(ErrorOf([&] { ValidateConfig(c); }), "$.pbar"));
  c.algorithm = "two-shqp";
  c.pbar = 1;
  c.problem = "inline";
  c.problem_json = Json::parse(R"({"sets": [
      {"kind": "hyperplane", "normal": [1, 0], "offset": 0},
      {"kind": "hyperplane", "normal": [0, 1], "offset": 0},
      {"kind": "hyperplane", "normal": [1, 1], "offset": 0}]})");
  c.x0 = Vec({1.0, 2.0});
  EXPECT_TRUE(Contains(ErrorOf([&] { ValidateConfig(c); }), "exactly 2 sets"));
  c.problem = "no-such-problem";
  EXPECT_TRUE(Contains(ErrorOf([&] { ValidateConfig(c); }), "$.problem"));
  c.problem = "two-lines-45";
  c.algorithm = "newton";
  EXPECT_TRUE(Contains(ErrorOf([&] { ValidateConfig(c); }), "$.algorithm"));
  c.algorithm = "map";
  c.x0 = Vec({1.0, 2.0, 3.0});
  EXPECT_TRUE(Contains(ErrorOf([&] { ValidateConfig(c); }), "$.x0"));
  c.x0.reset();
  c.tau_grid = std::vector<double>{};
  EXPECT_TRUE(Contains(ErrorOf([&] { ValidateConfig(c); }), "$.grid.tau"));
}

TEST(ConfigTest, EchoRoundTrips) {
  const Json j = Json::parse(R"({
      "problem": {"sets": [{"kind": "sphere", "center": [0, 0], "radius": 1},
                           {"kind": "hyperplane", "normal": [0, 1], "offset": 0.5}],
                  "known_solution": [0.8660254037844386, 0.5]},
      "algorithm": "memory-shqp", "x0": {"radius": 0.05}, "tau": 0.2,
      "pbar": 3, "relax_convex_sets": true, "pairing": "latest",
      "merit": "max-distance", "fallback": "drop-oldest", "max_iters": 77,
      "tol": 1e-9, "rng_seed": 5, "format": "json",
      "grid": {"tau": [0.2, 0.1], "seed": [1, 2]}})");
  const ExperimentConfig c = ParseConfig(j);
  EXPECT_EQ(c.pbar, 3);
  EXPECT_EQ(c.pairing, Pairing::kLatest);
  EXPECT_EQ(c.merit, Merit::kMaxDistance);
  EXPECT_EQ(c.fallback, FallbackPolicy::kDropOldest);
  EXPECT_EQ(*c.x0_radius, 0.05);
  const Json echo = ConfigToJson(c);
  EXPECT_EQ(ConfigToJson(ParseConfig(echo)), echo);
}

TEST(ConfigTest, InlineSetKinds) {
  const Json j = Json::parse(R"({"sets": [
      {"kind": "quadric", "q": [[2, 0], [0, 2]], "g": [0, 0], "c": -1},
      {"kind": "quadric", "q": [[2, 0], [0, 0]], "g": [0, -1], "c": 0,
       "manifold": true},
      {"kind": "quadric", "q": [[-1, 0], [0, 1]], "g": [0, 0], "c": -1},
      {"kind": "affine", "a": [[1, 1]], "b": [0]},
      {"kind": "box", "lower": [-1, -1], "upper": [1, 1]},
      {"kind": "points", "points": [[0, 0], [1, 1]]},
      {"kind": "polyhedron", "constraints": [
          {"normal": [1, 0], "offset": 0}, {"normal": [0, 1], "offset": 0,
                                            "equality": true}]},
      {"kind": "intersection", "members": [
          {"kind": "ball", "center": [0, 0], "radius": 2},
          {"kind": "halfspace", "normal": [1, 0], "offset": 0}]},
      {"kind": "fixed-rank", "rows": 1, "cols": 2, "rank": 1}]})");
  const ProblemInstance p = ParseProblem(j, "$.problem");
  ASSERT_EQ(p.size(), 9);
  EXPECT_TRUE(p.sets[0].is_convex());
  EXPECT_EQ(p.sets[1].kind(), SetKind::kSmoothManifold);
  EXPECT_FALSE(p.sets[2].is_convex());
  EXPECT_NEAR(p.sets[0].distance(Vec({2.0, 0.0})), 1.0, 1e-12);
  EXPECT_NEAR(p.sets[6].distance(Vec({1.0, 1.0})), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(p.sets[7].distance(Vec({3.0, 0.0})), 3.0, 1e-6);
}

TEST(RunTest, BacktrackExampleThroughTheHarness) {
  ExperimentConfig c;
  c.problem = "backtrack-example";
  c.algorithm = "mass";
  c.x0 = Vec({0.0, 1.0, 0.0});
  const RunResult r = RunExperiment(c);
  EXPECT_EQ(r.exit_code, kExitConverged);
  ASSERT_GE(r.trace.records.size(), 2u);
  EXPECT_LE((r.trace.records[1].x - Vec({-6.0, 0.0, 0.0})).norm(), 1e-9);
  int qp_steps = 0;
  for (const auto& rec : r.trace.records) qp_steps += rec.qp ? 1 : 0;
  EXPECT_LE(qp_steps, 2);
  EXPECT_EQ(r.report["terminal_status"], "converged");
  for (const char* key : {"config_echo", "terminal_status", "rate_report",
                          "regularity_estimate", "predicted_bounds",
                          "wallclock_ms"}) {
    EXPECT_TRUE(r.report.contains(key)) << key;
  }
  EXPECT_TRUE(r.report["wallclock_ms"].is_null());
}

TEST(RunTest, StartOnKGivesOneRow) {
  ExperimentConfig c;
  c.problem = "two-lines-45";
  c.algorithm = "map";
  c.x0 = Vec({0.0, 0.0});
  const RunResult r = RunExperiment(c);
  EXPECT_EQ(r.trace.records.size(), 1u);
  EXPECT_EQ(r.exit_code, kExitConverged);
}

TEST(RunTest, MassOnCircleLineIsSuperlinear) {
  ExperimentConfig c;
  c.problem = "circle-line";
  c.algorithm = "mass";
  const RunResult r = RunExperiment(c);
  ASSERT_TRUE(r.report["rate_report"]["estimated_order"].is_number())
      << r.report["rate_report"].dump();
  EXPECT_GE(r.report["rate_report"]["estimated_order"].get<double>(), 1.5);
}

TEST(RunTest, ExitCodesFollowTheStatus) {
  EXPECT_EQ(ExitCodeFor(TerminalStatus::kConverged), 0);
  EXPECT_EQ(ExitCodeFor(TerminalStatus::kMaxIterations), 2);
  EXPECT_EQ(ExitCodeFor(TerminalStatus::kFallbackExhausted), 3);
  ExperimentConfig c;
  c.problem = "rank1-affine";
  c.algorithm = "map";
  c.max_iters = 3;
  RunResult r = RunExperiment(c);
  EXPECT_EQ(r.trace.status, TerminalStatus::kMaxIterations);
  EXPECT_EQ(r.exit_code, 2);
  c.problem = "inline";
  c.problem_json = ParallelLines();
  c.algorithm = "mass";
  c.x0 = Vec({0.0, 3.0});
  c.fallback = FallbackPolicy::kNone;
  r = RunExperiment(c);
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_EQ(r.report["terminal_status"], ToString(TerminalStatus::kFallbackExhausted));
}

TEST(RunTest, RerunsAreByteIdentical) {
  ExperimentConfig c;
  c.problem = "rank1-affine";
  c.algorithm = "basic-shqp";
  c.x0_radius = 0.05;
  c.seed = 11;
  const RunResult a = RunExperiment(c);
  const RunResult b = RunExperiment(c);
  EXPECT_EQ(TraceCsv(a.trace, 2), TraceCsv(b.trace, 2));
  EXPECT_EQ(a.report.dump(2), b.report.dump(2));
  c.seed = 12;
  const RunResult other = RunExperiment(c);
  EXPECT_NE(a.x0, other.x0);
  EXPECT_LE((a.x0 - *MakeGalleryEntry("rank1-affine").problem.known_solution).norm(),
            0.05);
}

TEST(TraceIoTest, CsvIsLossless) {
  ExperimentConfig c;
  c.problem = "two-parabolas";
  c.algorithm = "mass";
  const RunResult r = RunExperiment(c);
  const std::string csv = TraceCsv(r.trace, 2);
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line,
            "outer_i,inner_j,step_kind,x,dist_to_set_1,dist_to_set_2,"
            "qp_active_size,qp_kkt_residual");
  std::size_t row = 0;
  while (std::getline(is, line)) {
    ASSERT_LT(row, r.trace.records.size());
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    ASSERT_EQ(cells.size(), 8u) << line;
    const auto& rec = r.trace.records[row];
    EXPECT_EQ(std::stoi(cells[0]), rec.outer);
    EXPECT_EQ(cells[2], ToString(rec.kind));
    std::stringstream xs(cells[3]);
    std::string coord;
    Eigen::Index k = 0;
    while (std::getline(xs, coord, ';')) {
      EXPECT_EQ(std::strtod(coord.c_str(), nullptr), rec.x[k++]);
    }
    EXPECT_EQ(k, rec.x.size());
    EXPECT_EQ(std::strtod(cells[4].c_str(), nullptr), rec.distances[0]);
    EXPECT_EQ(cells[6].empty(), !rec.qp.has_value());
    ++row;
  }
  EXPECT_EQ(row, r.trace.records.size());
  const Json tj = TraceJson(r.trace);
  ASSERT_EQ(tj.size(), r.trace.records.size());
  EXPECT_EQ(tj[0]["step_kind"], "start");
}

TEST(SweepTest, EmptyGridIsAUsageError) {
  ExperimentConfig c;
  c.problem = "circle-line";
  EXPECT_TRUE(Contains(ErrorOf([&] { RunSweep(c); }), "$.grid"));
  c.pbar_grid = std::vector<int>{};
  EXPECT_TRUE(Contains(ErrorOf([&] { RunSweep(c); }), "$.grid.pbar"));
}

TEST(SweepTest, RowsAreOrderedAndIndependentOfThreadCount) {
  ExperimentConfig c;
  c.problem = "circle-line";
  c.algorithm = "memory-shqp";
  c.x0_radius = 0.05;
  c.tau_grid = std::vector<double>{0.2, 0.1};
  c.seed_grid = std::vector<std::uint64_t>{1, 2, 3};
  c.jobs = 1;
  const SweepResult serial = RunSweep(c);
  c.jobs = 4;
  const SweepResult pooled = RunSweep(c);
  ASSERT_EQ(serial.rows.size(), 6u);
  EXPECT_EQ(SweepCsv(serial), SweepCsv(pooled));
  EXPECT_EQ(serial.rows[0].tau, 0.2);
  EXPECT_EQ(serial.rows[2].seed, 3u);
  EXPECT_EQ(serial.rows[3].tau, 0.1);
  for (const auto& row : serial.rows) {
    EXPECT_EQ(row.status, "converged");
    EXPECT_TRUE(row.error.empty()) << row.error;
    ASSERT_TRUE(row.predicted_8ltau.has_value());
    EXPECT_NEAR(*row.predicted_8ltau,
                PredictBounds(2, 2.0, row.tau).contraction_8ltau, 1e-12);
  }
}

TEST(SweepTest, CellFailuresStayInTheirRow) {
  // Start on K: nothing to analyze, but the sweep still completes.
  ExperimentConfig c;
  c.problem = "two-lines-45";
  c.algorithm = "memory-shqp";
  c.x0 = Vec({0.0, 0.0});
  c.tau_grid = std::vector<double>{0.1};
  c.pbar_grid = std::vector<int>{1, 2};
  const SweepResult s = RunSweep(c);
  ASSERT_EQ(s.rows.size(), 2u);
  for (const auto& row : s.rows) {
    EXPECT_EQ(row.status, "converged");
    EXPECT_TRUE(Contains(row.error, "insufficient-data"));
    EXPECT_FALSE(row.tail_qlinear_rate.has_value());
  }
  EXPECT_TRUE(Contains(SweepCsv(s), "insufficient-data"));
}

TEST(SweepTest, TauTrendOnCircleLine) {
  ExperimentConfig c;
  c.problem = "circle-line";
  c.algorithm = "memory-shqp";
  c.tau_grid = std::vector<double>{0.2, 0.1, 0.05};
  const SweepResult s = RunSweep(c);
  ASSERT_EQ(s.rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) ASSERT_TRUE(s.rows[i].tail_pbar_ratio);
  EXPECT_GT(*s.rows[0].tail_pbar_ratio, *s.rows[1].tail_pbar_ratio);
  EXPECT_GT(*s.rows[1].tail_pbar_ratio, *s.rows[2].tail_pbar_ratio);
}

TEST(SweepTest, MoreMemoryNeverHurtsOnTheConvexPair) {
  ExperimentConfig c;
  c.problem = "halfspace-pair";
  c.algorithm = "memory-shqp";
  c.relax_convex_sets = true;
  c.pbar_grid = std::vector<int>{1, 4, 16};
  const SweepResult s = RunSweep(c);
  ASSERT_EQ(s.rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) ASSERT_TRUE(s.rows[i].tail_pbar_ratio);
  EXPECT_GE(*s.rows[0].tail_pbar_ratio, *s.rows[1].tail_pbar_ratio);
  EXPECT_GE(*s.rows[1].tail_pbar_ratio, *s.rows[2].tail_pbar_ratio);
}

TEST(ListTest, TableHasStableRows) {
  const std::string table = GalleryTable();
  std::istringstream is(table);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "name,m,n,convex,manifolds,sosh,beta,eta");
  std::getline(is, line);
  EXPECT_EQ(line.rfind("backtrack-example,2,3,yes,no,", 0), 0u);
  EXPECT_TRUE(Contains(table, "\ntwo-lines-45,2,2,yes,yes,"));
  EXPECT_TRUE(Contains(table, "\nrank1-affine,2,4,no,"));
  EXPECT_EQ(table, GalleryTable());
}

}  // namespace
}  // namespace shqp
