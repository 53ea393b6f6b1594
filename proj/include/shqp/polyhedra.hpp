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

// Supporting halfspaces built from projections, polyhedra assembled from
// them, and the separation constant eta of a bundle of unit normals.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "shqp/core.hpp"
#include "shqp/qp.hpp"

namespace shqp {

// Where a halfspace came from: the set it supports and the (outer, inner)
// step that produced it. Negative values mean "untagged".
struct HalfspaceTags {
  int source = -1;
  int outer = -1;
  int inner = -1;
};

struct Halfspace {
  Vector normal;
  double offset = 0.0;
  bool equality = false;
  HalfspaceTags tags;

  LinearConstraint constraint() const { return {normal, offset, equality}; }

  // Signed violation <a, x> - b (absolute value for equalities).
  double violation(const Vector& x) const {
    const double s = normal.dot(x) - offset;
    return equality ? std::abs(s) : s;
  }
};

// Ordered list of halfspaces for a single QP. Two tagged constraints from
// the same source set and the same outer iteration may not coexist.
class Polyhedron {
 public:
  Polyhedron() = default;
  explicit Polyhedron(std::vector<Halfspace> constraints) {
    for (auto& h : constraints) Add(std::move(h));
  }

  void Add(Halfspace h) {
    if (!(h.normal.norm() > 1e-14)) {
      throw Error(ErrorCode::kInvalidArgument, "halfspace normal vanishes");
    }
    if (!constraints_.empty()) {
      CheckDimension(constraints_[0].normal.size(), h.normal.size(),
                     "polyhedron constraint");
    }
    if (h.tags.source >= 0) {
      for (const auto& other : constraints_) {
        if (other.tags.source == h.tags.source &&
            other.tags.outer == h.tags.outer) {
          throw Error(ErrorCode::kSourceConflict,
                      "two constraints from set " +
                          std::to_string(h.tags.source) +
                          " in outer iteration " +
                          std::to_string(h.tags.outer));
        }
      }
    }
    constraints_.push_back(std::move(h));
  }

  const std::vector<Halfspace>& constraints() const { return constraints_; }
  std::size_t size() const { return constraints_.size(); }
  bool empty() const { return constraints_.empty(); }

  std::vector<LinearConstraint> linear() const {
    std::vector<LinearConstraint> out;
    out.reserve(constraints_.size());
    for (const auto& h : constraints_) out.push_back(h.constraint());
    return out;
  }

 private:
  std::vector<Halfspace> constraints_;
};

// {x : <a, x> <= b} with a = x_prev - proj and b = <a, (1-tau) proj +
// tau x_prev>; a hyperplane through proj when the source is a manifold.
// Returns nullopt when x_prev already lies in the set (zero gap).
inline std::optional<Halfspace> HalfspaceFromProjection(
    const Vector& x_prev, const Vector& proj, bool is_manifold, double tau,
    HalfspaceTags tags = {}) {
  CheckDimension(x_prev.size(), proj.size(), "projection");
  if (!(tau >= 0.0 && tau < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tau must lie in [0, 1)");
  }
  Vector a = x_prev - proj;
  if (!(a.norm() > 1e-14)) return std::nullopt;
  if (is_manifold) tau = 0.0;
  const double b = a.dot((1.0 - tau) * proj + tau * x_prev);
  return Halfspace{std::move(a), b, is_manifold, tags};
}

inline QpResult ProjectOntoPolyhedron(const Polyhedron& p, const Vector& x0,
                                      const QpOptions& options = {}) {
  if (p.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "polyhedron has no constraints");
  }
  CheckDimension(p.constraints()[0].normal.size(), x0.size(), "QP start");
  const std::vector<LinearConstraint> linear = p.linear();
  return ProjectOntoConstraints(linear, x0, options);
}

// The halfspace {x : <x_prev - P(x_prev), x - P(x_prev)> <= 0} containing
// the polyhedron. Returns nullopt when x_prev is already inside.
inline std::optional<Halfspace> DerivedHalfspace(const Polyhedron& p,
                                                 const Vector& x_prev) {
  const QpResult qp = ProjectOntoPolyhedron(p, x_prev);
  if (qp.status != QpStatus::kOptimal) {
    throw Error(ErrorCode::kInvalidArgument, "polyhedron is empty");
  }
  if (!((x_prev - qp.point).norm() > 1e-12)) return std::nullopt;
  return HalfspaceFromProjection(x_prev, qp.point, /*is_manifold=*/false, 0.0);
}

namespace detail {

// Euclidean projection onto the unit simplex.
inline Vector ProjectOntoSimplex(const Vector& y) {
  std::vector<double> sorted(y.data(), y.data() + y.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumulative += sorted[i];
    const double candidate = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (sorted[i] - candidate > 0.0) theta = candidate;
  }
  return (y.array() - theta).cwiseMax(0.0);
}

// min ||V_S l|| s.t. sum l = 1 on a fixed support S; nullopt when the
// minimizer leaves the simplex.
inline std::optional<double> EtaOnSupport(const Matrix& v,
                                          const std::vector<int>& support) {
  const int s = static_cast<int>(support.size());
  Matrix vs(v.rows(), s);
  for (int c = 0; c < s; ++c) vs.col(c) = v.col(support[c]);
  Matrix kkt = Matrix::Zero(s + 1, s + 1);
  kkt.topLeftCorner(s, s) = 2.0 * vs.transpose() * vs;
  kkt.topRightCorner(s, 1).setOnes();
  kkt.bottomLeftCorner(1, s).setOnes();
  Vector rhs = Vector::Zero(s + 1);
  rhs[s] = 1.0;
  const Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  if ((kkt * sol - rhs).norm() > 1e-10) return std::nullopt;
  const Vector lambda = sol.head(s);
  if ((lambda.array() < -1e-12).any()) return std::nullopt;
  return (vs * lambda.cwiseMax(0.0)).norm();
}

// min over subsets S of the support problem, keeping only nonnegative
// solutions.
inline double EtaByEnumeration(const Matrix& v) {
  const int k = static_cast<int>(v.cols());
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    std::vector<int> support;
    for (int i = 0; i < k; ++i) {
      if (mask & (1u << i)) support.push_back(i);
    }
    if (const auto value = EtaOnSupport(v, support)) {
      best = std::min(best, *value);
    }
  }
  return best;
}

inline double EtaByProjectedGradient(const Matrix& v) {
  const int k = static_cast<int>(v.cols());
  const Matrix gram = v.transpose() * v;
  auto objective = [&](const Vector& l) { return l.dot(gram * l); };
  Vector lambda = Vector::Constant(k, 1.0 / k);
  double value = objective(lambda);
  double step = 1.0;
  for (int iter = 0; iter < 10000; ++iter) {
    const Vector grad = 2.0 * gram * lambda;
    step = std::min(1.0, 2.0 * step);
    Vector next;
    double next_value;
    while (true) {
      next = ProjectOntoSimplex(lambda - step * grad);
      next_value = objective(next);
      if (next_value <= value + 1e-4 * grad.dot(next - lambda) ||
          step < 1e-16) {
        break;
      }
      step *= 0.5;
    }
    const double moved = (next - lambda).norm();
    lambda = std::move(next);
    value = next_value;
    if (moved <= 1e-15) break;
  }
  double eta = std::sqrt(std::max(value, 0.0));
  // The objective is quadratic, so eta itself is only accurate to the square
  // root of the solver tolerance; finish with an exact solve on the support.
  std::vector<int> support;
  for (int i = 0; i < k; ++i) {
    if (lambda[i] > 1e-10) support.push_back(i);
  }
  if (const auto polished = EtaOnSupport(v, support)) {
    eta = std::min(eta, *polished);
  }
  return eta;
}

}  // namespace detail

// eta = min over the unit simplex of ||sum l_i v_i||, the distance from the
// origin to the convex hull of the normals.
inline double Eta(std::span<const Vector> normals) {
  if (normals.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "eta of an empty bundle");
  }
  const Eigen::Index n = normals[0].size();
  Matrix v(n, static_cast<Eigen::Index>(normals.size()));
  for (std::size_t i = 0; i < normals.size(); ++i) {
    CheckDimension(n, normals[i].size(), "eta normal");
    if (std::abs(normals[i].norm() - 1.0) > 1e-10) {
      throw Error(ErrorCode::kInvalidArgument, "eta normals must be unit");
    }
    v.col(static_cast<Eigen::Index>(i)) = normals[i];
  }
  if (normals.size() <= 6) return detail::EtaByEnumeration(v);
  return detail::EtaByProjectedGradient(v);
}

inline double Eta(const std::vector<Vector>& normals) {
  return Eta(std::span<const Vector>(normals));
}

}  // namespace shqp
