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

// Experiment configuration: a JSON document naming a gallery problem (or
// describing one inline), an algorithm, a start point and solver knobs.
// Every parse error carries the JSON path of the offending value, e.g.
// "$.problem.sets[1].normal: expected an array of numbers".

#ifndef SHQP_CONFIG_HPP_
#define SHQP_CONFIG_HPP_

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "shqp/core.hpp"
#include "shqp/gallery.hpp"
#include "shqp/sets.hpp"
#include "shqp/solvers.hpp"

namespace shqp {

using Json = nlohmann::json;

inline const std::vector<std::string>& AlgorithmNames() {
  static const std::vector<std::string> names = {
      "map",         "basic-shqp", "mass",  "memory-shqp",
      "two-shqp",    "averaged",   "global"};
  return names;
}

struct ExperimentConfig {
  // Gallery name; "inline" when problem_json describes the sets.
  std::string problem = "backtrack-example";
  Json problem_json;
  std::string algorithm = "mass";
  // Explicit start; otherwise a seeded point in B(known_solution, radius),
  // and the gallery default when neither is available.
  std::optional<Vector> x0;
  std::optional<double> x0_radius;
  double tau = 0.1;
  int pbar = 1;
  bool relax_convex_sets = false;
  Pairing pairing = Pairing::kFixed;
  Merit merit = Merit::kSumOfSquares;
  FallbackPolicy fallback = FallbackPolicy::kLadder;
  int max_iters = 1000;
  double tol = 1e-10;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string format = "csv";
  bool timing = false;
  // Sweep axes; an absent axis uses the scalar value above.
  std::optional<std::vector<double>> tau_grid;
  std::optional<std::vector<int>> pbar_grid;
  std::optional<std::vector<std::uint64_t>> seed_grid;
  int jobs = 0;  // 0: hardware concurrency
};

namespace config_detail {

[[noreturn]] inline void Fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, path + ": " + what);
}

inline const Json& Field(const Json& j, const std::string& path,
                         const char* key) {
  if (!j.is_object()) Fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) Fail(path, std::string("missing field '") + key + "'");
  return *it;
}

inline double Number(const Json& j, const std::string& path) {
  if (!j.is_number()) Fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) Fail(path, "expected a finite number");
  return v;
}

inline int Integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) Fail(path, "expected an integer");
  return j.get<int>();
}

inline bool Boolean(const Json& j, const std::string& path) {
  if (!j.is_boolean()) Fail(path, "expected true or false");
  return j.get<bool>();
}

inline std::string String(const Json& j, const std::string& path) {
  if (!j.is_string()) Fail(path, "expected a string");
  return j.get<std::string>();
}

inline Vector VectorOf(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) Fail(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] =
        Number(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

inline Matrix MatrixOf(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) Fail(path, "expected an array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  Matrix a;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    const Vector row = VectorOf(j[r], rp);
    if (r == 0) {
      cols = static_cast<std::size_t>(row.size());
      a.resize(static_cast<Eigen::Index>(rows), row.size());
    } else if (static_cast<std::size_t>(row.size()) != cols) {
      Fail(rp, "row length " + std::to_string(row.size()) + " != " +
                   std::to_string(cols));
    }
    a.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return a;
}

inline std::optional<const Json*> Optional(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return &*it;
}

// Calls `f` with the error path prefixed, so nested library errors still
// point at the object that produced them.
template <typename F>
auto Guard(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    // Already located: "invalid-argument: $.path: ...".
    if (std::string(e.what()).rfind("invalid-argument: $", 0) == 0) throw;
    Fail(path, e.what());
  }
}

inline LinearConstraint ConstraintOf(const Json& j, const std::string& path) {
  LinearConstraint c;
  c.normal = VectorOf(Field(j, path, "normal"), path + ".normal");
  c.offset = Number(Field(j, path, "offset"), path + ".offset");
  if (auto e = Optional(j, "equality")) c.equality = Boolean(**e, path + ".equality");
  return c;
}

}  // namespace config_detail

// Set kinds: halfspace, hyperplane {normal, offset}; affine {a, b}; line
// {point, direction}; ball, sphere {center, radius}; box {lower, upper};
// quadric {q, g, c, manifold} for 1/2 x'Qx + g'x + c <= 0 (= 0 when
// manifold is true); fixed-rank {rows, cols, rank}; points
// {points}; polyhedron {constraints: [{normal, offset, equality}]}; union,
// intersection {members}.
inline SetOracle ParseSet(const Json& j, const std::string& path) {
  using namespace config_detail;
  const std::string kind = String(Field(j, path, "kind"), path + ".kind");
  auto vec = [&](const char* key) {
    return VectorOf(Field(j, path, key), path + "." + key);
  };
  auto num = [&](const char* key) {
    return Number(Field(j, path, key), path + "." + key);
  };
  auto members = [&]() {
    const Json& arr = Field(j, path, "members");
    const std::string mp = path + ".members";
    if (!arr.is_array() || arr.empty()) Fail(mp, "expected a nonempty array");
    std::vector<SetOracle> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out.push_back(ParseSet(arr[i], mp + "[" + std::to_string(i) + "]"));
    }
    return out;
  };
  return Guard(path, [&]() -> SetOracle {
    if (kind == "halfspace") return SetOracle::Halfspace(vec("normal"), num("offset"));
    if (kind == "hyperplane") {
      return SetOracle::Hyperplane(vec("normal"), num("offset"));
    }
    if (kind == "affine") {
      return SetOracle::Affine(MatrixOf(Field(j, path, "a"), path + ".a"),
                               vec("b"));
    }
    if (kind == "line") return SetOracle::Line(vec("point"), vec("direction"));
    if (kind == "ball") return SetOracle::Ball(vec("center"), num("radius"));
    if (kind == "sphere") return SetOracle::Sphere(vec("center"), num("radius"));
    if (kind == "box") return SetOracle::Box(vec("lower"), vec("upper"));
    if (kind == "quadric") {
      const Matrix q = MatrixOf(Field(j, path, "q"), path + ".q");
      const Vector g = vec("g");
      const double c = num("c");
      bool manifold = false;
      if (auto m = Optional(j, "manifold")) manifold = Boolean(**m, path + ".manifold");
      SmoothFunction f = Quadric(q, g, c);
      const int n = static_cast<int>(g.size());
      if (manifold) return SetOracle::SmoothManifold(n, std::move(f), "quadric");
      const Eigen::SelfAdjointEigenSolver<Matrix> es(f.quadric->q);
      const bool convex = es.eigenvalues().minCoeff() >= -1e-12;
      return SetOracle::LevelSet(n, std::move(f), convex, "quadric");
    }
    if (kind == "fixed-rank") {
      return SetOracle::FixedRank(Integer(Field(j, path, "rows"), path + ".rows"),
                                  Integer(Field(j, path, "cols"), path + ".cols"),
                                  Integer(Field(j, path, "rank"), path + ".rank"));
    }
    if (kind == "points") {
      const Json& arr = Field(j, path, "points");
      if (!arr.is_array() || arr.empty()) {
        Fail(path + ".points", "expected a nonempty array");
      }
      std::vector<Vector> pts;
      for (std::size_t i = 0; i < arr.size(); ++i) {
        pts.push_back(
            VectorOf(arr[i], path + ".points[" + std::to_string(i) + "]"));
      }
      return SetOracle::PointSet(std::move(pts));
    }
    if (kind == "polyhedron") {
      const Json& arr = Field(j, path, "constraints");
      if (!arr.is_array() || arr.empty()) {
        Fail(path + ".constraints", "expected a nonempty array");
      }
      std::vector<LinearConstraint> cs;
      for (std::size_t i = 0; i < arr.size(); ++i) {
        cs.push_back(ConstraintOf(
            arr[i], path + ".constraints[" + std::to_string(i) + "]"));
      }
      return SetOracle::Polyhedron(std::move(cs));
    }
    if (kind == "union") return SetOracle::Union(members());
    if (kind == "intersection") return SetOracle::Intersection(members());
    Fail(path + ".kind", "unknown set kind '" + kind + "'");
  });
}

// {"sets": [...], "known_solution": [...], "intersection": {set}}
inline ProblemInstance ParseProblem(const Json& j, const std::string& path) {
  using namespace config_detail;
  const Json& sets = Field(j, path, "sets");
  if (!sets.is_array() || sets.empty()) {
    Fail(path + ".sets", "expected a nonempty array of sets");
  }
  ProblemInstance p;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const std::string sp = path + ".sets[" + std::to_string(i) + "]";
    p.sets.push_back(ParseSet(sets[i], sp));
    if (i > 0 && p.sets[i].dimension() != p.sets[0].dimension()) {
      Fail(sp, "dimension " + std::to_string(p.sets[i].dimension()) +
                   " != " + std::to_string(p.sets[0].dimension()));
    }
  }
  if (auto ks = Optional(j, "known_solution")) {
    p.known_solution = VectorOf(**ks, path + ".known_solution");
  }
  if (auto k = Optional(j, "intersection")) {
    p.intersection = ParseSet(**k, path + ".intersection");
  }
  Guard(path, [&]() {
    p.Validate();
    return 0;
  });
  return p;
}

// A loaded problem plus the metadata a gallery entry carries.
struct ResolvedProblem {
  ProblemInstance problem;
  std::optional<GalleryMetadata> meta;
  std::optional<Vector> default_x0;
};

inline ResolvedProblem ResolveProblem(const ExperimentConfig& cfg) {
  ResolvedProblem out;
  if (cfg.problem == "inline") {
    out.problem = ParseProblem(cfg.problem_json, "$.problem");
    return out;
  }
  const auto names = GalleryNames();
  if (std::find(names.begin(), names.end(), cfg.problem) == names.end()) {
    config_detail::Fail("$.problem", "unknown problem '" + cfg.problem + "'");
  }
  GalleryEntry e = MakeGalleryEntry(cfg.problem);
  out.problem = std::move(e.problem);
  out.meta = std::move(e.meta);
  out.default_x0 = std::move(e.default_x0);
  return out;
}

inline Vector ResolveStart(const ExperimentConfig& cfg,
                           const ResolvedProblem& rp) {
  const int n = rp.problem.dimension();
  if (cfg.x0) {
    if (cfg.x0->size() != n) {
      config_detail::Fail("$.x0", "length " + std::to_string(cfg.x0->size()) +
                                      " != problem dimension " +
                                      std::to_string(n));
    }
    return *cfg.x0;
  }
  if (cfg.x0_radius) {
    if (!rp.problem.known_solution) {
      config_detail::Fail("$.x0", "random start needs a known solution");
    }
    std::mt19937_64 rng(cfg.seed);
    return UniformInBall(*rp.problem.known_solution, *cfg.x0_radius, rng);
  }
  if (rp.default_x0) return *rp.default_x0;
  config_detail::Fail("$.x0", "no start point given");
}

inline std::optional<Merit> MeritFromString(const std::string& s) {
  if (s == "intersection-distance") return Merit::kIntersectionDistance;
  if (s == "sum-of-squares") return Merit::kSumOfSquares;
  if (s == "max-distance") return Merit::kMaxDistance;
  return std::nullopt;
}

inline std::optional<FallbackPolicy> FallbackFromString(const std::string& s) {
  if (s == "ladder") return FallbackPolicy::kLadder;
  if (s == "drop-oldest") return FallbackPolicy::kDropOldest;
  if (s == "none") return FallbackPolicy::kNone;
  return std::nullopt;
}

// Checks that need the problem: algorithm-specific requirements and the
// start point. Throws with a JSON path.
inline void ValidateConfig(const ExperimentConfig& cfg) {
  using config_detail::Fail;
  const auto& algos = AlgorithmNames();
  if (std::find(algos.begin(), algos.end(), cfg.algorithm) == algos.end()) {
    Fail("$.algorithm", "unknown algorithm '" + cfg.algorithm + "'");
  }
  if (!(cfg.tau >= 0.0 && cfg.tau < 1.0)) Fail("$.tau", "expected 0 <= tau < 1");
  if (cfg.pbar < 0) Fail("$.pbar", "expected pbar >= 0");
  if (cfg.algorithm == "memory-shqp" && cfg.pbar < 1) {
    Fail("$.pbar", "memory-shqp needs pbar >= 1");
  }
  if (cfg.max_iters < 0) Fail("$.max_iters", "expected max_iters >= 0");
  if (!(cfg.tol > 0.0)) Fail("$.tol", "expected tol > 0");
  if (cfg.format != "csv" && cfg.format != "json") {
    Fail("$.format", "expected 'csv' or 'json'");
  }
  if (cfg.x0_radius && !(*cfg.x0_radius > 0.0)) {
    Fail("$.x0.radius", "expected radius > 0");
  }
  if (cfg.tau_grid) {
    if (cfg.tau_grid->empty()) Fail("$.grid.tau", "empty grid axis");
    for (std::size_t i = 0; i < cfg.tau_grid->size(); ++i) {
      const double t = (*cfg.tau_grid)[i];
      if (!(t >= 0.0 && t < 1.0)) {
        Fail("$.grid.tau[" + std::to_string(i) + "]", "expected 0 <= tau < 1");
      }
    }
  }
  if (cfg.pbar_grid) {
    if (cfg.pbar_grid->empty()) Fail("$.grid.pbar", "empty grid axis");
    for (std::size_t i = 0; i < cfg.pbar_grid->size(); ++i) {
      const int p = (*cfg.pbar_grid)[i];
      if (p < 0 || (cfg.algorithm == "memory-shqp" && p < 1)) {
        Fail("$.grid.pbar[" + std::to_string(i) + "]",
             cfg.algorithm == "memory-shqp" ? "memory-shqp needs pbar >= 1"
                                            : "expected pbar >= 0");
      }
    }
  }
  if (cfg.seed_grid && cfg.seed_grid->empty()) {
    Fail("$.grid.seed", "empty grid axis");
  }
  const ResolvedProblem rp = ResolveProblem(cfg);
  if (cfg.algorithm == "two-shqp" && rp.problem.size() != 2) {
    Fail("$.algorithm", "two-shqp needs exactly 2 sets, problem has " +
                            std::to_string(rp.problem.size()));
  }
  if (cfg.algorithm == "global" && cfg.merit == Merit::kIntersectionDistance &&
      !rp.problem.intersection) {
    Fail("$.merit", "intersection-distance merit needs an intersection oracle");
  }
  ResolveStart(cfg, rp);
}

// Reads the JSON document form. Unknown top-level keys are rejected so
// typos do not silently fall back to defaults.
inline ExperimentConfig ParseConfig(const Json& j) {
  using namespace config_detail;
  if (!j.is_object()) Fail("$", "expected an object");
  static const std::vector<std::string> known = {
      "problem", "algorithm", "x0",     "tau",     "pbar",   "relax_convex_sets",
      "pairing", "merit",     "fallback", "max_iters", "tol", "rng_seed",
      "out_dir", "format",    "timing", "grid",    "jobs"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      Fail("$." + it.key(), "unknown key");
    }
  }
  ExperimentConfig cfg;
  if (auto p = Optional(j, "problem")) {
    if ((*p)->is_string()) {
      cfg.problem = (*p)->get<std::string>();
      if (cfg.problem == "inline") Fail("$.problem", "'inline' is reserved");
    } else if ((*p)->is_object()) {
      cfg.problem = "inline";
      cfg.problem_json = **p;
    } else {
      Fail("$.problem", "expected a gallery name or a problem object");
    }
  }
  if (auto a = Optional(j, "algorithm")) cfg.algorithm = String(**a, "$.algorithm");
  if (auto x = Optional(j, "x0")) {
    if ((*x)->is_array()) {
      cfg.x0 = VectorOf(**x, "$.x0");
    } else if ((*x)->is_object()) {
      cfg.x0_radius = Number(Field(**x, "$.x0", "radius"), "$.x0.radius");
    } else {
      Fail("$.x0", "expected an array or {\"radius\": r}");
    }
  }
  if (auto v = Optional(j, "tau")) cfg.tau = Number(**v, "$.tau");
  if (auto v = Optional(j, "pbar")) cfg.pbar = Integer(**v, "$.pbar");
  if (auto v = Optional(j, "relax_convex_sets")) {
    cfg.relax_convex_sets = Boolean(**v, "$.relax_convex_sets");
  }
  if (auto v = Optional(j, "pairing")) {
    const std::string s = String(**v, "$.pairing");
    if (s == "fixed") {
      cfg.pairing = Pairing::kFixed;
    } else if (s == "latest") {
      cfg.pairing = Pairing::kLatest;
    } else {
      Fail("$.pairing", "expected 'fixed' or 'latest'");
    }
  }
  if (auto v = Optional(j, "merit")) {
    auto m = MeritFromString(String(**v, "$.merit"));
    if (!m) Fail("$.merit", "unknown merit");
    cfg.merit = *m;
  }
  if (auto v = Optional(j, "fallback")) {
    auto f = FallbackFromString(String(**v, "$.fallback"));
    if (!f) Fail("$.fallback", "unknown fallback policy");
    cfg.fallback = *f;
  }
  if (auto v = Optional(j, "max_iters")) cfg.max_iters = Integer(**v, "$.max_iters");
  if (auto v = Optional(j, "tol")) cfg.tol = Number(**v, "$.tol");
  if (auto v = Optional(j, "rng_seed")) {
    if (!(*v)->is_number_unsigned()) Fail("$.rng_seed", "expected an unsigned integer");
    cfg.seed = (*v)->get<std::uint64_t>();
  }
  if (auto v = Optional(j, "out_dir")) cfg.out_dir = String(**v, "$.out_dir");
  if (auto v = Optional(j, "format")) cfg.format = String(**v, "$.format");
  if (auto v = Optional(j, "timing")) cfg.timing = Boolean(**v, "$.timing");
  if (auto v = Optional(j, "jobs")) cfg.jobs = Integer(**v, "$.jobs");
  if (auto g = Optional(j, "grid")) {
    const Json& grid = **g;
    if (!grid.is_object()) Fail("$.grid", "expected an object");
    for (auto it = grid.begin(); it != grid.end(); ++it) {
      const std::string gp = "$.grid." + it.key();
      if (!it->is_array()) Fail(gp, "expected an array");
      if (it.key() == "tau") {
        std::vector<double> v;
        for (std::size_t i = 0; i < it->size(); ++i) {
          v.push_back(Number((*it)[i], gp + "[" + std::to_string(i) + "]"));
        }
        cfg.tau_grid = v;
      } else if (it.key() == "pbar") {
        std::vector<int> v;
        for (std::size_t i = 0; i < it->size(); ++i) {
          v.push_back(Integer((*it)[i], gp + "[" + std::to_string(i) + "]"));
        }
        cfg.pbar_grid = v;
      } else if (it.key() == "seed") {
        std::vector<std::uint64_t> v;
        for (std::size_t i = 0; i < it->size(); ++i) {
          const Json& e = (*it)[i];
          if (!e.is_number_unsigned()) {
            Fail(gp + "[" + std::to_string(i) + "]", "expected an unsigned integer");
          }
          v.push_back(e.get<std::uint64_t>());
        }
        cfg.seed_grid = v;
      } else {
        Fail(gp, "unknown grid axis");
      }
    }
  }
  return cfg;
}

inline Json VectorJson(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

// Normalized echo of a config; ParseConfig(ConfigToJson(c)) == c.
inline Json ConfigToJson(const ExperimentConfig& cfg) {
  Json j;
  if (cfg.problem == "inline") {
    j["problem"] = cfg.problem_json;
  } else {
    j["problem"] = cfg.problem;
  }
  j["algorithm"] = cfg.algorithm;
  if (cfg.x0) {
    j["x0"] = VectorJson(*cfg.x0);
  } else if (cfg.x0_radius) {
    j["x0"] = {{"radius", *cfg.x0_radius}};
  } else {
    j["x0"] = nullptr;
  }
  j["tau"] = cfg.tau;
  j["pbar"] = cfg.pbar;
  j["relax_convex_sets"] = cfg.relax_convex_sets;
  j["pairing"] = cfg.pairing == Pairing::kFixed ? "fixed" : "latest";
  j["merit"] = ToString(cfg.merit);
  j["fallback"] = ToString(cfg.fallback);
  j["max_iters"] = cfg.max_iters;
  j["tol"] = cfg.tol;
  j["rng_seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["format"] = cfg.format;
  j["timing"] = cfg.timing;
  if (cfg.tau_grid || cfg.pbar_grid || cfg.seed_grid) {
    Json g = Json::object();
    if (cfg.tau_grid) g["tau"] = *cfg.tau_grid;
    if (cfg.pbar_grid) g["pbar"] = *cfg.pbar_grid;
    if (cfg.seed_grid) g["seed"] = *cfg.seed_grid;
    j["grid"] = g;
  }
  return j;
}

}  // namespace shqp

#endif  // SHQP_CONFIG_HPP_
