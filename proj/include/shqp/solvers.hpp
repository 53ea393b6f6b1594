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

// Iteration schemes for finding a point in K_1 ∩ ... ∩ K_m:
//
//   RunMap                 cyclic projections
//   RunBasicShqp           supporting halfspaces per schedule block, then a
//                          QP onto their intersection
//   RunMassProjection      one block containing every set
//   RunMemoryShqp          farthest set only, tau-relaxed halfspaces kept
//                          for the last p iterations
//   RunTwoShqp             two sets, QP on the last two halfspaces when the
//                          projection path turns by less than pi/2
//   RunAveragedProjections x <- mean_l P_l(x)
//   RunGlobal              QP step safeguarded by a merit function
//
// Every run returns a Trace holding each iterate with its per-set
// distances, recomputed at recording time.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "shqp/core.hpp"
#include "shqp/polyhedra.hpp"
#include "shqp/qp.hpp"
#include "shqp/sets.hpp"

namespace shqp {

struct ProblemInstance {
  std::vector<SetOracle> sets;
  std::optional<Vector> known_solution;
  // K itself, when a projection onto the intersection is available.
  std::optional<SetOracle> intersection;

  int dimension() const { return sets.empty() ? 0 : sets[0].dimension(); }
  int size() const { return static_cast<int>(sets.size()); }

  void Validate() const {
    if (sets.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "problem has no sets");
    }
    for (const auto& s : sets) {
      CheckDimension(dimension(), s.dimension(), "problem set");
    }
    if (intersection) {
      CheckDimension(dimension(), intersection->dimension(),
                     "intersection oracle");
    }
    if (known_solution) {
      CheckDimension(dimension(), known_solution->size(), "known solution");
      for (std::size_t l = 0; l < sets.size(); ++l) {
        if (sets[l].distance(*known_solution) > 1e-8) {
          throw Error(ErrorCode::kInvalidArgument,
                      "known solution is not in set " + std::to_string(l + 1));
        }
      }
    }
  }

  std::vector<double> Distances(const Vector& x) const {
    std::vector<double> d;
    d.reserve(sets.size());
    for (const auto& s : sets) d.push_back(s.distance(x));
    return d;
  }
};

enum class Pairing {
  kLatest,  // each set's most recent halfspace within the outer iteration
  kFixed,   // only halfspaces generated in the current block
};

// Blocks S_1..S_J of 0-based set indices.
struct Schedule {
  std::vector<std::vector<int>> blocks;
  Pairing pairing = Pairing::kFixed;

  static Schedule Cyclic(int m, Pairing pairing = Pairing::kFixed) {
    Schedule s;
    for (int l = 0; l < m; ++l) s.blocks.push_back({l});
    s.pairing = pairing;
    return s;
  }
  static Schedule Mass(int m) {
    Schedule s;
    s.blocks.emplace_back();
    for (int l = 0; l < m; ++l) s.blocks[0].push_back(l);
    s.pairing = Pairing::kFixed;
    return s;
  }

  void Validate(int m) const {
    std::vector<bool> covered(m, false);
    for (const auto& block : blocks) {
      std::vector<bool> seen(m, false);
      for (int l : block) {
        if (l < 0 || l >= m) {
          throw Error(ErrorCode::kInvalidArgument,
                      "schedule references set " + std::to_string(l + 1));
        }
        if (seen[l]) {
          throw Error(ErrorCode::kSourceConflict,
                      "set listed twice in one schedule block");
        }
        seen[l] = covered[l] = true;
      }
    }
    if (std::find(covered.begin(), covered.end(), false) != covered.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "schedule blocks do not cover every set");
    }
  }
};

enum class FallbackPolicy {
  kLadder,      // drop oldest, relax equalities, then project
  kDropOldest,  // drop oldest only
  kNone,
};

inline const char* ToString(FallbackPolicy p) {
  switch (p) {
    case FallbackPolicy::kLadder:
      return "ladder";
    case FallbackPolicy::kDropOldest:
      return "drop-oldest";
    case FallbackPolicy::kNone:
      return "none";
  }
  return "unknown";
}

struct SolverConfig {
  // Relaxation for outer iteration i (1-based); applied to nonconvex
  // sources, and to convex ones only when relax_convex_sets is set.
  std::function<double(int)> tau_schedule = [](int) { return 0.1; };
  bool relax_convex_sets = false;
  // Outer iterations whose halfspaces stay in the QP.
  int memory = 0;
  int max_outer_iterations = 1000;
  double stop_tolerance = 1e-10;
  FallbackPolicy fallback = FallbackPolicy::kLadder;
  std::uint64_t rng_seed = 0;

  static std::function<double(int)> ConstantTau(double tau) {
    return [tau](int) { return tau; };
  }

  void Validate() const {
    if (!(stop_tolerance > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "stop tolerance must be > 0");
    }
    if (memory < 0) {
      throw Error(ErrorCode::kInvalidArgument, "memory must be >= 0");
    }
    if (max_outer_iterations < 0) {
      throw Error(ErrorCode::kInvalidArgument, "iteration cap must be >= 0");
    }
    if (!tau_schedule) {
      throw Error(ErrorCode::kInvalidArgument, "missing tau schedule");
    }
  }
};

enum class StepKind {
  kStart,
  kSetProjection,
  kQpProjection,
  kAveraged,
  kLineSearch,
};

inline const char* ToString(StepKind kind) {
  switch (kind) {
    case StepKind::kStart:
      return "start";
    case StepKind::kSetProjection:
      return "set-projection";
    case StepKind::kQpProjection:
      return "qp-projection";
    case StepKind::kAveraged:
      return "averaged";
    case StepKind::kLineSearch:
      return "line-search";
  }
  return "unknown";
}

enum class TerminalStatus { kConverged, kMaxIterations, kFallbackExhausted };

inline const char* ToString(TerminalStatus s) {
  switch (s) {
    case TerminalStatus::kConverged:
      return "converged";
    case TerminalStatus::kMaxIterations:
      return "max-iterations";
    case TerminalStatus::kFallbackExhausted:
      return "qp-infeasible-fallback-exhausted";
  }
  return "unknown";
}

struct QpInfo {
  int constraints = 0;
  int active_size = 0;
  double kkt_residual = 0.0;
};

struct TraceRecord {
  int outer = 0;
  int inner = 0;
  StepKind kind = StepKind::kStart;
  int set_index = -1;  // 0-based; only for kSetProjection
  Vector x;
  std::vector<double> distances;
  std::optional<QpInfo> qp;
  std::optional<double> merit;

  double max_distance() const {
    return distances.empty()
               ? 0.0
               : *std::max_element(distances.begin(), distances.end());
  }
};

struct Trace {
  std::vector<TraceRecord> records;
  TerminalStatus status = TerminalStatus::kMaxIterations;
  int outer_iterations = 0;
  // 2-SHQP iterations that took the copy branch.
  int copy_steps = 0;
  // QP solves that needed the fallback policy.
  int fallback_events = 0;

  const Vector& final_point() const { return records.back().x; }

  // The start point and the last record of every outer iteration.
  std::vector<Vector> OuterIterates() const {
    std::vector<Vector> out;
    for (std::size_t r = 0; r < records.size(); ++r) {
      if (r + 1 == records.size() || records[r + 1].outer != records[r].outer) {
        out.push_back(records[r].x);
      }
    }
    return out;
  }
};

namespace detail {

class Recorder {
 public:
  Recorder(const ProblemInstance& problem, const SolverConfig& cfg,
           Trace& trace)
      : problem_(problem), cfg_(cfg), trace_(trace) {}

  // Appends a record unless x repeats the previous iterate. Returns true
  // once every set is within the stop tolerance.
  bool Record(int outer, int inner, StepKind kind, int set_index,
              const Vector& x, std::optional<QpInfo> qp = std::nullopt,
              std::optional<double> merit = std::nullopt) {
    if (!AllFinite(x)) {
      throw Error(ErrorCode::kInvalidArgument, "iterate is not finite");
    }
    if (!trace_.records.empty() && trace_.records.back().x == x) {
      return trace_.records.back().max_distance() <= cfg_.stop_tolerance;
    }
    TraceRecord rec;
    rec.outer = outer;
    rec.inner = inner;
    rec.kind = kind;
    rec.set_index = set_index;
    rec.x = x;
    rec.distances = problem_.Distances(x);
    rec.qp = qp;
    rec.merit = merit;
    trace_.records.push_back(std::move(rec));
    trace_.outer_iterations = std::max(trace_.outer_iterations, outer);
    if (trace_.records.back().max_distance() <= cfg_.stop_tolerance) {
      trace_.status = TerminalStatus::kConverged;
      return true;
    }
    return false;
  }

 private:
  const ProblemInstance& problem_;
  const SolverConfig& cfg_;
  Trace& trace_;
};

inline void Prepare(const ProblemInstance& problem, const Vector& x0,
                    const SolverConfig& cfg) {
  problem.Validate();
  cfg.Validate();
  CheckDimension(problem.dimension(), x0.size(), "start point");
  if (!AllFinite(x0)) {
    throw Error(ErrorCode::kInvalidArgument, "start point is not finite");
  }
}

inline int Farthest(const std::vector<double>& d) {
  return static_cast<int>(std::max_element(d.begin(), d.end()) - d.begin());
}

struct StepOutcome {
  bool ok = false;
  Vector point;
  StepKind kind = StepKind::kQpProjection;
  int set_index = -1;
  std::optional<QpInfo> qp;
  std::vector<int> active;
};

inline StepOutcome FromQp(const QpResult& qp, int constraints) {
  StepOutcome out;
  out.ok = true;
  out.point = qp.point;
  out.qp = QpInfo{constraints, static_cast<int>(qp.active_set.size()),
                  qp.kkt_residual};
  out.active = qp.active_set;
  return out;
}

inline QpResult SolveHalfspaces(const std::vector<Halfspace>& hs,
                                const Vector& x,
                                const std::vector<int>& warm = {}) {
  std::vector<LinearConstraint> lc;
  lc.reserve(hs.size());
  for (const auto& h : hs) lc.push_back(h.constraint());
  QpOptions options;
  options.warm_start = warm;
  return ProjectOntoConstraints(lc, x, options);
}

// QP onto `hs` (oldest first) with the configured recovery when the
// constraints are inconsistent.
inline StepOutcome QpWithFallback(const ProblemInstance& problem,
                                  std::vector<Halfspace> hs, const Vector& x,
                                  FallbackPolicy policy, Trace& trace) {
  QpResult qp = SolveHalfspaces(hs, x);
  if (qp.status == QpStatus::kOptimal) {
    return FromQp(qp, static_cast<int>(hs.size()));
  }
  ++trace.fallback_events;
  if (policy == FallbackPolicy::kNone) return {};
  // (1) Drop constraints from the oldest outer iteration present.
  while (qp.status != QpStatus::kOptimal && hs.size() > 1) {
    int oldest = hs.front().tags.outer;
    int newest = oldest;
    for (const auto& h : hs) {
      oldest = std::min(oldest, h.tags.outer);
      newest = std::max(newest, h.tags.outer);
    }
    if (oldest == newest) break;
    std::erase_if(hs, [oldest](const Halfspace& h) {
      return h.tags.outer == oldest;
    });
    qp = SolveHalfspaces(hs, x);
  }
  if (qp.status == QpStatus::kOptimal) {
    return FromQp(qp, static_cast<int>(hs.size()));
  }
  if (policy == FallbackPolicy::kDropOldest) return {};
  // (2) Treat hyperplanes as their supporting halfspaces.
  bool relaxed = false;
  for (auto& h : hs) {
    if (h.equality) {
      h.equality = false;
      relaxed = true;
    }
  }
  if (relaxed) {
    qp = SolveHalfspaces(hs, x);
    if (qp.status == QpStatus::kOptimal) {
      return FromQp(qp, static_cast<int>(hs.size()));
    }
  }
  // (3) Plain projection onto the farthest set.
  const int far = Farthest(problem.Distances(x));
  StepOutcome out;
  out.ok = true;
  out.point = problem.sets[far].project(x).nearest;
  out.kind = StepKind::kSetProjection;
  out.set_index = far;
  return out;
}

// Memory update at the end of outer iteration i. A convex source's newest
// halfspace supports K_l wherever it was generated, so a source that made
// no fresh one (zero gap) carries its newest forward, re-tagged with i.
inline void RetainConvex(const ProblemInstance& problem, int i,
                         const std::vector<std::optional<Halfspace>>& fresh,
                         std::vector<std::optional<Halfspace>>& newest,
                         std::deque<Halfspace>& retained) {
  for (int l = 0; l < problem.size(); ++l) {
    if (!problem.sets[l].is_convex()) continue;
    if (fresh[l]) newest[l] = fresh[l];
    if (!newest[l]) continue;
    Halfspace h = *newest[l];
    h.tags.outer = i;
    std::erase_if(retained, [&](const Halfspace& r) {
      return r.tags.source == l && r.offset == h.offset && r.normal == h.normal;
    });
    retained.push_back(h);
  }
}

inline double TauFor(const SetOracle& set, const SolverConfig& cfg, int outer) {
  if (set.is_convex() && !cfg.relax_convex_sets) return 0.0;
  const double tau = cfg.tau_schedule(outer);
  if (!(tau >= 0.0 && tau < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tau schedule left [0, 1)");
  }
  return tau;
}

}  // namespace detail

inline Trace RunMap(const ProblemInstance& problem, const Vector& x0,
                    const SolverConfig& cfg = {}) {
  detail::Prepare(problem, x0, cfg);
  Trace trace;
  detail::Recorder rec(problem, cfg, trace);
  if (rec.Record(0, 0, StepKind::kStart, -1, x0)) return trace;
  Vector x = x0;
  for (int i = 1; i <= cfg.max_outer_iterations; ++i) {
    for (int l = 0; l < problem.size(); ++l) {
      Projection p = problem.sets[l].project(x);
      if (p.distance <= cfg.stop_tolerance) continue;
      x = std::move(p.nearest);
      if (rec.Record(i, l + 1, StepKind::kSetProjection, l, x)) return trace;
    }
  }
  trace.status = TerminalStatus::kMaxIterations;
  return trace;
}

// Halfspaces of convex sources stay valid forever and survive into the next
// cfg.memory outer iterations. Tangent hyperplanes of nonconvex sets are not
// kept: two of them may be inconsistent. With memory = 0 every QP uses only
// the current outer iteration's constraints.
inline Trace RunBasicShqp(const ProblemInstance& problem, const Vector& x0,
                          const Schedule& schedule,
                          const SolverConfig& cfg = {}) {
  detail::Prepare(problem, x0, cfg);
  schedule.Validate(problem.size());
  Trace trace;
  detail::Recorder rec(problem, cfg, trace);
  if (rec.Record(0, 0, StepKind::kStart, -1, x0)) return trace;
  Vector x = x0;
  std::deque<Halfspace> retained;
  const int m = problem.size();
  std::vector<std::optional<Halfspace>> newest(m);
  for (int i = 1; i <= cfg.max_outer_iterations; ++i) {
    while (!retained.empty() && retained.front().tags.outer < i - cfg.memory) {
      retained.pop_front();
    }
    std::vector<std::optional<Halfspace>> latest(m);
    for (int j = 1; j <= static_cast<int>(schedule.blocks.size()); ++j) {
      const Vector x_prev = x;
      std::vector<Halfspace> generated;
      std::vector<Vector> nearest;
      for (int l : schedule.blocks[j - 1]) {
        Projection p = problem.sets[l].project(x_prev);
        if (p.distance <= cfg.stop_tolerance) continue;
        auto h = HalfspaceFromProjection(x_prev, p.nearest,
                                         problem.sets[l].is_manifold(), 0.0,
                                         {l, i, j});
        if (!h) continue;
        latest[l] = *h;
        generated.push_back(*h);
        nearest.push_back(std::move(p.nearest));
      }
      std::vector<Halfspace> active(retained.begin(), retained.end());
      if (schedule.pairing == Pairing::kFixed) {
        active.insert(active.end(), generated.begin(), generated.end());
      } else {
        for (const auto& h : latest) {
          if (h) active.push_back(*h);
        }
      }
      if (active.empty()) continue;
      if (active.size() == 1 && generated.size() == 1) {
        // One fresh halfspace through P(x): the QP answer is P(x) itself.
        x = nearest[0];
        if (rec.Record(i, j, StepKind::kSetProjection, generated[0].tags.source,
                       x)) {
          return trace;
        }
        continue;
      }
      detail::StepOutcome step =
          detail::QpWithFallback(problem, active, x, cfg.fallback, trace);
      if (!step.ok) {
        trace.status = TerminalStatus::kFallbackExhausted;
        return trace;
      }
      x = step.point;
      if (rec.Record(i, j, step.kind, step.set_index, x, step.qp)) {
        return trace;
      }
    }
    if (cfg.memory > 0) {
      detail::RetainConvex(problem, i, latest, newest, retained);
    }
  }
  trace.status = TerminalStatus::kMaxIterations;
  return trace;
}

inline Trace RunMassProjection(const ProblemInstance& problem,
                               const Vector& x0, const SolverConfig& cfg = {}) {
  problem.Validate();
  return RunBasicShqp(problem, x0, Schedule::Mass(problem.size()), cfg);
}

// One tau-relaxed halfspace per outer iteration, from the farthest set;
// the QP runs over the halfspaces of the last cfg.memory + 1 iterations.
inline Trace RunMemoryShqp(const ProblemInstance& problem, const Vector& x0,
                           const SolverConfig& cfg = {}) {
  detail::Prepare(problem, x0, cfg);
  if (cfg.memory < 1) {
    throw Error(ErrorCode::kInvalidArgument, "memory-shqp needs memory >= 1");
  }
  Trace trace;
  detail::Recorder rec(problem, cfg, trace);
  if (rec.Record(0, 0, StepKind::kStart, -1, x0)) return trace;
  Vector x = x0;
  std::deque<Halfspace> retained;
  for (int i = 1; i <= cfg.max_outer_iterations; ++i) {
    const std::vector<double> d = problem.Distances(x);
    const int far = detail::Farthest(d);
    const SetOracle& set = problem.sets[far];
    const Projection p = set.project(x);
    const double tau = detail::TauFor(set, cfg, i);
    auto h = HalfspaceFromProjection(x, p.nearest, /*is_manifold=*/false, tau,
                                     {far, i, 1});
    if (!h) continue;
    retained.push_back(*h);
    while (retained.front().tags.outer < i - cfg.memory) retained.pop_front();
    std::vector<Halfspace> active(retained.begin(), retained.end());
    detail::StepOutcome step =
        detail::QpWithFallback(problem, active, x, cfg.fallback, trace);
    if (!step.ok) {
      trace.status = TerminalStatus::kFallbackExhausted;
      return trace;
    }
    if (step.kind == StepKind::kSetProjection) retained.clear();
    x = step.point;
    if (rec.Record(i, 1, step.kind, step.set_index, x, step.qp)) return trace;
  }
  trace.status = TerminalStatus::kMaxIterations;
  return trace;
}

inline Trace RunTwoShqp(const ProblemInstance& problem, const Vector& x0,
                        const SolverConfig& cfg = {}) {
  detail::Prepare(problem, x0, cfg);
  if (problem.size() != 2) {
    throw Error(ErrorCode::kInvalidArgument, "two-shqp needs exactly 2 sets");
  }
  Trace trace;
  detail::Recorder rec(problem, cfg, trace);
  if (rec.Record(0, 0, StepKind::kStart, -1, x0)) return trace;
  Vector x = x0;
  for (int i = 1; i <= cfg.max_outer_iterations; ++i) {
    const Vector a = x;
    const Vector b = problem.sets[0].project(a).nearest;
    if (rec.Record(i, 1, StepKind::kSetProjection, 0, b)) return trace;
    const Vector c = problem.sets[1].project(b).nearest;
    if (rec.Record(i, 2, StepKind::kSetProjection, 1, c)) return trace;
    x = c;
    const Vector u = a - b;
    const Vector w = c - b;
    if (u.norm() < 1e-14 || w.norm() < 1e-14 || !(u.dot(w) > 0.0)) {
      ++trace.copy_steps;
      continue;
    }
    // {y : <y - b, a - b> <= 0} and {y : <y - c, b - c> <= 0}.
    std::vector<Halfspace> hs = {
        Halfspace{u, u.dot(b), false, {0, i, 1}},
        Halfspace{-w, -w.dot(c), false, {1, i, 2}},
    };
    detail::StepOutcome step =
        detail::QpWithFallback(problem, hs, c, cfg.fallback, trace);
    if (!step.ok) {
      trace.status = TerminalStatus::kFallbackExhausted;
      return trace;
    }
    x = step.point;
    if (rec.Record(i, 3, step.kind, step.set_index, x, step.qp)) return trace;
  }
  trace.status = TerminalStatus::kMaxIterations;
  return trace;
}

inline double SumOfSquaredDistances(const ProblemInstance& problem,
                                    const Vector& x) {
  double f = 0.0;
  for (double d : problem.Distances(x)) f += d * d;
  return f;
}

inline Vector AveragedPoint(const ProblemInstance& problem, const Vector& x) {
  Vector sum = Vector::Zero(x.size());
  for (const auto& s : problem.sets) sum += s.project(x).nearest;
  return sum / static_cast<double>(problem.size());
}

inline Trace RunAveragedProjections(const ProblemInstance& problem,
                                    const Vector& x0,
                                    const SolverConfig& cfg = {}) {
  detail::Prepare(problem, x0, cfg);
  Trace trace;
  detail::Recorder rec(problem, cfg, trace);
  if (rec.Record(0, 0, StepKind::kStart, -1, x0, std::nullopt,
                 SumOfSquaredDistances(problem, x0))) {
    return trace;
  }
  Vector x = x0;
  for (int i = 1; i <= cfg.max_outer_iterations; ++i) {
    x = AveragedPoint(problem, x);
    if (rec.Record(i, 1, StepKind::kAveraged, -1, x, std::nullopt,
                   SumOfSquaredDistances(problem, x))) {
      return trace;
    }
  }
  trace.status = TerminalStatus::kMaxIterations;
  return trace;
}

enum class Merit { kIntersectionDistance, kSumOfSquares, kMaxDistance };

inline const char* ToString(Merit m) {
  switch (m) {
    case Merit::kIntersectionDistance:
      return "intersection-distance";
    case Merit::kSumOfSquares:
      return "sum-of-squares";
    case Merit::kMaxDistance:
      return "max-distance";
  }
  return "unknown";
}

inline double EvaluateMerit(const ProblemInstance& problem, Merit merit,
                            const Vector& x) {
  switch (merit) {
    case Merit::kIntersectionDistance:
      if (!problem.intersection) {
        throw Error(ErrorCode::kNoIntersectionOracle,
                    "intersection-distance merit needs an oracle for K");
      }
      return problem.intersection->distance(x);
    case Merit::kSumOfSquares:
      return SumOfSquaredDistances(problem, x);
    case Merit::kMaxDistance: {
      const auto d = problem.Distances(x);
      return *std::max_element(d.begin(), d.end());
    }
  }
  return 0.0;
}

struct GlobalStepResult {
  Vector next;
  bool accepted = false;
  TraceRecord record;
  // Convex-combination weight on the QP point (1 = pure QP step).
  double t = 1.0;
  int dropped = 0;
};

// One safeguarded step from x: try the QP point, then the QP point with
// the oldest halfspace removed, then t * qp + (1 - t) * averaged point for
// t = 1/2, ..., 2^-8. Not accepted when no candidate lowers the merit.
inline GlobalStepResult GlobalStep(const ProblemInstance& problem,
                                   const Vector& x, const Polyhedron& polyhedron,
                                   Merit merit, const SolverConfig& cfg = {}) {
  detail::Prepare(problem, x, cfg);
  const double f0 = EvaluateMerit(problem, merit, x);
  GlobalStepResult out;
  out.next = x;
  out.record.x = x;
  out.record.kind = StepKind::kQpProjection;
  out.record.merit = f0;
  if (f0 <= 0.0) {
    out.accepted = true;
    out.record.distances = problem.Distances(x);
    return out;
  }
  std::vector<Halfspace> hs = polyhedron.constraints();
  auto finish = [&](const Vector& point, StepKind kind, double value,
                    std::optional<QpInfo> qp) {
    out.next = point;
    out.accepted = true;
    out.record.x = point;
    out.record.kind = kind;
    out.record.merit = value;
    out.record.qp = qp;
    out.record.distances = problem.Distances(point);
    return out;
  };
  std::optional<Vector> qp_point;
  std::optional<QpInfo> qp_info;
  std::vector<int> warm;
  while (!hs.empty()) {
    const QpResult qp = detail::SolveHalfspaces(hs, x, warm);
    if (qp.status == QpStatus::kOptimal) {
      qp_point = qp.point;
      qp_info = QpInfo{static_cast<int>(hs.size()),
                       static_cast<int>(qp.active_set.size()), qp.kkt_residual};
      const double f = EvaluateMerit(problem, merit, qp.point);
      if (f < f0) {
        return finish(qp.point,
                      out.dropped == 0 ? StepKind::kQpProjection
                                       : StepKind::kLineSearch,
                      f, qp_info);
      }
      if (out.dropped > 0 || hs.size() == 1) break;
      warm.clear();
      for (int a : qp.active_set) {
        if (a > 0) warm.push_back(a - 1);
      }
    }
    hs.erase(hs.begin());
    ++out.dropped;
  }
  if (!qp_point) {
    out.record.distances = problem.Distances(x);
    return out;
  }
  const Vector averaged = AveragedPoint(problem, x);
  for (int k = 1; k <= 8; ++k) {
    const double t = std::ldexp(1.0, -k);
    const Vector candidate = t * (*qp_point) + (1.0 - t) * averaged;
    const double f = EvaluateMerit(problem, merit, candidate);
    if (f < f0) {
      out.t = t;
      return finish(candidate, StepKind::kLineSearch, f, qp_info);
    }
  }
  out.record.distances = problem.Distances(x);
  return out;
}

// Mass-projection halfspaces (with memory) fed through GlobalStep; rejected
// steps fall back to an averaged-projection step.
inline Trace RunGlobal(const ProblemInstance& problem, const Vector& x0,
                       Merit merit, const SolverConfig& cfg = {}) {
  detail::Prepare(problem, x0, cfg);
  Trace trace;
  detail::Recorder rec(problem, cfg, trace);
  if (rec.Record(0, 0, StepKind::kStart, -1, x0, std::nullopt,
                 EvaluateMerit(problem, merit, x0))) {
    return trace;
  }
  Vector x = x0;
  std::deque<Halfspace> retained;
  std::vector<std::optional<Halfspace>> newest(problem.size());
  for (int i = 1; i <= cfg.max_outer_iterations; ++i) {
    while (!retained.empty() && retained.front().tags.outer < i - cfg.memory) {
      retained.pop_front();
    }
    Polyhedron polyhedron;
    for (const auto& h : retained) polyhedron.Add(h);
    std::vector<Halfspace> fresh;
    for (int l = 0; l < problem.size(); ++l) {
      const Projection p = problem.sets[l].project(x);
      if (p.distance <= cfg.stop_tolerance) continue;
      auto h = HalfspaceFromProjection(x, p.nearest,
                                       problem.sets[l].is_manifold(), 0.0,
                                       {l, i, 1});
      if (!h) continue;
      polyhedron.Add(*h);
      fresh.push_back(*h);
    }
    GlobalStepResult step = GlobalStep(problem, x, polyhedron, merit, cfg);
    if (step.accepted) {
      x = step.next;
      if (rec.Record(i, 1, step.record.kind, -1, x, step.record.qp,
                     step.record.merit)) {
        return trace;
      }
    } else {
      x = AveragedPoint(problem, x);
      if (rec.Record(i, 1, StepKind::kAveraged, -1, x, std::nullopt,
                     EvaluateMerit(problem, merit, x))) {
        return trace;
      }
    }
    if (cfg.memory > 0) {
      std::vector<std::optional<Halfspace>> by_source(problem.size());
      for (const auto& h : fresh) by_source[h.tags.source] = h;
      detail::RetainConvex(problem, i, by_source, newest, retained);
    }
  }
  trace.status = TerminalStatus::kMaxIterations;
  return trace;
}

}  // namespace shqp
