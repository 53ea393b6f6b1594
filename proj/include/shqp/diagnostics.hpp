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

// Rate measurement on traces, empirical regularity constants of a problem,
// and the closed-form contraction bounds they are compared against.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "shqp/core.hpp"
#include "shqp/polyhedra.hpp"
#include "shqp/sets.hpp"
#include "shqp/solvers.hpp"

namespace shqp {

struct RateReport {
  // Errors ||x_i - xbar|| above the floor guard, in order.
  std::vector<double> errors;
  std::vector<double> q_ratios;
  double tail_qlinear_rate = 0.0;
  double estimated_order = 0.0;
  bool fejer_ok = true;
  int pbar = 1;
  std::vector<double> pbar_ratios;
  // Largest p-step ratio over the tail; empty when the trace is shorter
  // than p + 1 usable errors.
  std::optional<double> tail_pbar_ratio;
};

namespace detail {

inline int TailLength(std::size_t n) {
  const int quarter = static_cast<int>((n + 3) / 4);
  return std::min<int>(static_cast<int>(n), std::max(4, quarter));
}

inline double LeastSquaresSlope(const std::vector<double>& xs,
                                const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

// Rate statistics of a raw error sequence. Errors at or below `floor` end
// the usable prefix. `fejer_ok` is left true; it needs the iterates.
inline RateReport AnalyzeErrors(const std::vector<double>& raw, double floor,
                                int pbar) {
  if (pbar < 1) {
    throw Error(ErrorCode::kInvalidArgument, "p-step ratios need p >= 1");
  }
  RateReport report;
  report.pbar = pbar;
  for (double e : raw) {
    if (!(e > floor)) break;
    report.errors.push_back(e);
  }
  const auto& e = report.errors;
  if (e.size() < 5) {
    throw Error(ErrorCode::kInsufficientData,
                "need at least 5 errors above the floor, have " +
                    std::to_string(e.size()));
  }
  for (std::size_t i = 0; i + 1 < e.size(); ++i) {
    report.q_ratios.push_back(e[i + 1] / e[i]);
  }
  const int tail = detail::TailLength(report.q_ratios.size());
  const std::size_t first = report.q_ratios.size() - tail;
  double log_sum = 0.0;
  std::vector<double> xs, ys;
  for (std::size_t i = first; i < report.q_ratios.size(); ++i) {
    log_sum += std::log(report.q_ratios[i]);
    xs.push_back(std::log(e[i]));
    ys.push_back(std::log(e[i + 1]));
  }
  report.tail_qlinear_rate = std::exp(log_sum / tail);
  report.estimated_order = detail::LeastSquaresSlope(xs, ys);
  for (std::size_t i = 0; i + pbar < e.size(); ++i) {
    report.pbar_ratios.push_back(e[i + pbar] / e[i]);
  }
  if (!report.pbar_ratios.empty()) {
    const int ptail = detail::TailLength(report.pbar_ratios.size());
    report.tail_pbar_ratio = *std::max_element(
        report.pbar_ratios.end() - ptail, report.pbar_ratios.end());
  }
  return report;
}

inline double FloorGuard(const Vector& xbar) {
  return 100.0 * kMachineEpsilon * xbar.norm();
}

// Statistics over the outer iterates of `trace` against the limit xbar.
inline RateReport AnalyzeTrace(const Trace& trace, const Vector& xbar,
                               int pbar) {
  const std::vector<Vector> iterates = trace.OuterIterates();
  std::vector<double> raw;
  raw.reserve(iterates.size());
  for (const auto& x : iterates) {
    CheckDimension(xbar.size(), x.size(), "trace limit");
    raw.push_back((x - xbar).norm());
  }
  RateReport report = AnalyzeErrors(raw, FloorGuard(xbar), pbar);
  for (std::size_t i = 0; i + 1 < raw.size(); ++i) {
    if (raw[i + 1] > raw[i] + 1e-10) report.fejer_ok = false;
  }
  return report;
}

// The known solution when the problem has one, else the last iterate.
inline Vector TraceLimit(const ProblemInstance& problem, const Trace& trace) {
  if (problem.known_solution) return *problem.known_solution;
  return trace.final_point();
}

struct IntersectionDistance {
  double value = 0.0;
  // True when no oracle for K exists and the value is the distance to the
  // limit of a mass-projection run (an upper bound).
  bool proxy = false;
};

inline IntersectionDistance DistanceToIntersection(
    const ProblemInstance& problem, const Vector& x, bool allow_proxy = true) {
  if (problem.intersection) return {problem.intersection->distance(x), false};
  if (problem.size() == 1) return {problem.sets[0].distance(x), false};
  if (!allow_proxy) {
    throw Error(ErrorCode::kNoIntersectionOracle,
                "problem has no oracle for the intersection");
  }
  SolverConfig cfg;
  cfg.memory = 1;
  cfg.stop_tolerance = 1e-12;
  cfg.max_outer_iterations = 2000;
  const Trace t = RunMassProjection(problem, x, cfg);
  if (t.status != TerminalStatus::kConverged) {
    throw Error(ErrorCode::kNoIntersectionOracle,
                "proxy run for d(x, K) did not converge");
  }
  return {(t.final_point() - x).norm(), true};
}

struct RegularityEstimate {
  double beta_hat = 1.0;
  bool beta_from_proxy = false;
  double eta_hat = 1.0;
  // radius -> max over sets of the sampled super-regularity ratio; empty
  // optional when no normal could be sampled at that radius.
  std::map<double, std::optional<double>> delta_profile;
  std::optional<double> sosh_m_hat;
};

// eta of one unit normal per set; manifold normals enter with the sign
// that makes eta smallest.
inline double EtaWithSignChoice(const std::vector<Vector>& normals,
                                const std::vector<bool>& flippable) {
  std::vector<int> free_idx;
  for (std::size_t i = 0; i < normals.size(); ++i) {
    if (flippable[i]) free_idx.push_back(static_cast<int>(i));
  }
  double best = std::numeric_limits<double>::infinity();
  const unsigned combos = 1u << free_idx.size();
  for (unsigned mask = 0; mask < combos; ++mask) {
    std::vector<Vector> v = normals;
    for (std::size_t k = 0; k < free_idx.size(); ++k) {
      if (mask & (1u << k)) v[free_idx[k]] = -v[free_idx[k]];
    }
    best = std::min(best, Eta(v));
  }
  return best;
}

// A unit normal of `set` at xstar, from projecting a nearby off-set probe.
inline std::optional<Vector> SampleNormalAt(const SetOracle& set,
                                            const Vector& xstar, double h,
                                            std::mt19937_64& rng) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    const Vector probe = UniformInBall(xstar, h, rng);
    const Projection p = set.project(probe);
    if (p.distance <= 1e-3 * h) continue;
    if (const SmoothFunction* f = set.smooth_function()) {
      const Vector g = f->gradient(xstar);
      if (g.norm() > 1e-14) return Vector(g.normalized());
    }
    return Vector((probe - p.nearest) / p.distance);
  }
  return std::nullopt;
}

inline RegularityEstimate EstimateRegularity(const ProblemInstance& problem,
                                             const Vector& xstar,
                                             const std::vector<double>& radii,
                                             int samples, std::uint64_t seed,
                                             bool allow_proxy = true) {
  problem.Validate();
  CheckDimension(problem.dimension(), xstar.size(), "xstar");
  if (radii.empty() || samples <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "need radii and samples");
  }
  for (const auto& s : problem.sets) {
    if (s.distance(xstar) > 1e-8) {
      throw Error(ErrorCode::kInvalidArgument, "xstar is not in K");
    }
  }
  if (!problem.intersection && problem.size() > 1 && !allow_proxy) {
    throw Error(ErrorCode::kNoIntersectionOracle,
                "problem has no oracle for the intersection");
  }
  std::mt19937_64 rng(seed);
  RegularityEstimate est;
  // d(x, K) / max_l d(x, K_l), or nullopt when x lies in every set.
  auto ratio = [&](const Vector& x) -> std::optional<double> {
    const std::vector<double> d = problem.Distances(x);
    const double worst = *std::max_element(d.begin(), d.end());
    if (worst <= 1e-12 * std::max(1.0, (x - xstar).norm())) return std::nullopt;
    const IntersectionDistance dk = DistanceToIntersection(problem, x);
    est.beta_from_proxy = est.beta_from_proxy || dk.proxy;
    return dk.value / worst;
  };
  const Eigen::Index n = xstar.size();
  for (double r : radii) {
    std::optional<Vector> best_x;
    double best = 0.0;
    for (int s = 0; s < samples; ++s) {
      const Vector x = UniformInBall(xstar, r, rng);
      const auto q = ratio(x);
      if (q && *q > best) {
        best = *q;
        best_x = x;
      }
    }
    if (!best_x) continue;
    // The worst direction can be a thin set; compass search from the best
    // probe, staying inside the ball.
    for (double step = r / 4.0; step > r * 1e-4; step /= 2.0) {
      bool improved = true;
      for (int sweep = 0; improved && sweep < 50; ++sweep) {
        improved = false;
        for (Eigen::Index i = 0; i < n; ++i) {
          for (double sign : {-1.0, 1.0}) {
            Vector x = *best_x;
            x[i] += sign * step;
            if ((x - xstar).norm() > r) continue;
            const auto q = ratio(x);
            if (q && *q > best) {
              best = *q;
              best_x = x;
              improved = true;
            }
          }
        }
      }
    }
    est.beta_hat = std::max(est.beta_hat, best);
  }

  std::vector<Vector> normals;
  std::vector<bool> flippable;
  const double h = 1e-4 * std::max(1.0, xstar.norm());
  for (const auto& set : problem.sets) {
    if (auto v = SampleNormalAt(set, xstar, h, rng)) {
      normals.push_back(*v);
      flippable.push_back(set.is_manifold());
    }
  }
  if (!normals.empty()) est.eta_hat = EtaWithSignChoice(normals, flippable);

  const int pair_samples = std::min(samples, 400);
  for (double r : radii) {
    std::optional<double> worst;
    for (std::size_t l = 0; l < problem.sets.size(); ++l) {
      try {
        const auto check = CheckSuperRegular(problem.sets[l], xstar, 0.0, r,
                                             pair_samples, seed + l);
        if (std::isfinite(check.worst_ratio)) {
          worst = std::max(worst.value_or(check.worst_ratio),
                           check.worst_ratio);
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kInsufficientSamples) throw;
      }
    }
    est.delta_profile[r] = worst;
  }
  const double r_min = *std::min_element(radii.begin(), radii.end());
  for (std::size_t l = 0; l < problem.sets.size(); ++l) {
    try {
      const auto check =
          CheckSosh(problem.sets[l], xstar, std::numeric_limits<double>::max(),
                    r_min, pair_samples, seed + 101 + l);
      if (std::isfinite(check.worst_m)) {
        est.sosh_m_hat =
            std::max(est.sosh_m_hat.value_or(check.worst_m), check.worst_m);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInsufficientSamples) throw;
    }
  }
  return est;
}

struct PredictedBounds {
  double rho_thm36 = 0.0;
  double c_thm36 = 0.0;
  double rho_lem52 = 0.0;
  double l_lem52 = 0.0;
  double rho_bar = 0.0;
  double l_bar = 0.0;
  double contraction_8ltau = 0.0;
  // rho_thm36 >= 1: the linear-rate guarantee says nothing.
  bool bound_vacuous = false;
};

// Closed-form constants for m sets with metric-inequality constant beta
// and relaxation tau:
//
//   rho^2 = 1 + 1/(b^2 m^3) + 1/(4 b^4 m^6) - 1/(b^2 m^2) + 1/(2 b^3 m^5)
//             - 1/(16 b^4 m^8) + 1/(16 b^4 m^6)
//   c     = sqrt(m) sqrt((1 + 1/(4 m^3 b^2))^2 + 1/(16 m^6 b^4))
//   rho_tau = sqrt(b^2 - (1 - tau)^2) / b,      L = b / (1 - rho_tau)
//   rho_bar = sqrt(b^2 - 1/4) / b,              L_bar = b / (1 - rho_bar)
inline PredictedBounds PredictBounds(int m, double beta, double tau) {
  if (m < 1 || !(beta >= 1.0) || !(tau >= 0.0 && tau < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "bounds need m >= 1, beta >= 1, tau in [0, 1)");
  }
  const double md = m;
  const double b = beta;
  const double b2 = b * b;
  const double b3 = b2 * b;
  const double b4 = b2 * b2;
  const double rho2 = 1.0 + 1.0 / (b2 * std::pow(md, 3)) +
                      1.0 / (4.0 * b4 * std::pow(md, 6)) -
                      1.0 / (b2 * md * md) + 1.0 / (2.0 * b3 * std::pow(md, 5)) -
                      1.0 / (16.0 * b4 * std::pow(md, 8)) +
                      1.0 / (16.0 * b4 * std::pow(md, 6));
  PredictedBounds out;
  out.rho_thm36 = std::sqrt(rho2);
  const double inner = 1.0 + 1.0 / (4.0 * std::pow(md, 3) * b2);
  out.c_thm36 = std::sqrt(md) *
                std::sqrt(inner * inner + 1.0 / (16.0 * std::pow(md, 6) * b4));
  out.bound_vacuous = out.rho_thm36 >= 1.0;
  out.rho_lem52 = std::sqrt(std::max(0.0, b2 - (1.0 - tau) * (1.0 - tau))) / b;
  out.l_lem52 = b / (1.0 - out.rho_lem52);
  out.rho_bar = std::sqrt(b2 - 0.25) / b;
  out.l_bar = b / (1.0 - out.rho_bar);
  out.contraction_8ltau = 8.0 * out.l_bar * tau;
  return out;
}

// Empirical check of the linear-convergence contract on a tail of outer
// iterates: if d(x_{i+1}, K) <= rho d(x_i, K) and ||x_{i+1} - x_i|| <=
// c d(x_i, K) hold throughout, then ||x_i - x_inf|| <= c / (1 - rho) d(x_i, K).
struct LinearContract {
  double rho = 0.0;
  double c = 0.0;
  bool premise = false;
  bool conclusion = false;
};

inline LinearContract CheckLinearContract(const std::vector<Vector>& iterates,
                                          const std::vector<double>& dist_to_k,
                                          const Vector& limit) {
  if (iterates.size() != dist_to_k.size() || iterates.size() < 2) {
    throw Error(ErrorCode::kInsufficientData, "contract needs >= 2 iterates");
  }
  LinearContract out;
  std::size_t used = 0;
  for (std::size_t i = 0; i + 1 < iterates.size(); ++i) {
    if (!(dist_to_k[i] > 0.0)) break;
    out.rho = std::max(out.rho, dist_to_k[i + 1] / dist_to_k[i]);
    out.c = std::max(out.c, (iterates[i + 1] - iterates[i]).norm() /
                                dist_to_k[i]);
    ++used;
  }
  out.premise = used > 0 && out.rho < 1.0;
  out.conclusion = true;
  if (out.premise) {
    for (std::size_t i = 0; i < used; ++i) {
      if ((iterates[i] - limit).norm() >
          out.c / (1.0 - out.rho) * dist_to_k[i] + 1e-12) {
        out.conclusion = false;
      }
    }
  }
  return out;
}

}  // namespace shqp
