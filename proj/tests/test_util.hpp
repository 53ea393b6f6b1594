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

// Independent reference computations shared by the unit tests and the
// acceptance binary. Nothing here calls into the library's solvers.

#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "shqp/qp.hpp"

namespace shqp::testing_util {

inline Vector Vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Projection onto a polyhedron by trying every candidate active subset:
// each subset is solved as an equality-constrained least-distance problem
// (minimum-norm correction), infeasible candidates are discarded and the
// nearest survivor wins. Returns nullopt when no candidate is feasible.
inline std::optional<Vector> BruteForceProjection(
    const std::vector<LinearConstraint>& cs, const Vector& x0,
    double feas_tol = 1e-9) {
  const int k = static_cast<int>(cs.size());
  std::optional<Vector> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    bool has_all_equalities = true;
    for (int c = 0; c < k; ++c) {
      if (cs[c].equality && !(mask & (1u << c))) has_all_equalities = false;
    }
    if (!has_all_equalities) continue;
    std::vector<int> rows;
    for (int c = 0; c < k; ++c) {
      if (mask & (1u << c)) rows.push_back(c);
    }
    Vector x = x0;
    if (!rows.empty()) {
      Matrix a(static_cast<Eigen::Index>(rows.size()), x0.size());
      Vector b(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        a.row(static_cast<Eigen::Index>(r)) = cs[rows[r]].normal.transpose();
        b[static_cast<Eigen::Index>(r)] = cs[rows[r]].offset;
      }
      // x = x0 - A^+ (A x0 - b), then check the system is consistent.
      const Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU |
                                                Eigen::ComputeThinV);
      x = x0 - svd.solve(a * x0 - b);
      if ((a * x - b).norm() > 1e-9) continue;
    }
    bool feasible = true;
    for (const auto& c : cs) {
      const double s = c.normal.dot(x) - c.offset;
      const double scale = c.normal.norm();
      if (c.equality ? std::abs(s) > feas_tol * scale : s > feas_tol * scale) {
        feasible = false;
        break;
      }
    }
    if (!feasible) continue;
    const double d = (x - x0).norm();
    if (d < best_dist) {
      best_dist = d;
      best = x;
    }
  }
  return best;
}

// min over the simplex of ||V l|| by nested grid refinement: a uniform grid
// of spacing h over the simplex, then repeated zooms around the best cell
// until the spacing reaches `resolution`.
inline double GridEta(const std::vector<Vector>& v, double resolution) {
  const int k = static_cast<int>(v.size());
  if (k == 1) return v[0].norm();
  auto value = [&](const std::vector<double>& l) {
    Vector s = Vector::Zero(v[0].size());
    for (int i = 0; i < k; ++i) s += l[i] * v[i];
    return s.norm();
  };
  std::vector<double> center(k, 1.0 / k);
  double half_width = 1.0;
  double best = value(center);
  const int steps = 20;
  while (true) {
    const double h = 2.0 * half_width / steps;
    std::vector<double> best_point = center;
    // Enumerate the first k-1 coordinates on the local grid; the last one
    // is determined by the simplex constraint.
    std::vector<int> idx(k - 1, 0);
    while (true) {
      std::vector<double> l(k);
      double sum = 0.0;
      bool ok = true;
      for (int i = 0; i < k - 1; ++i) {
        l[i] = center[i] - half_width + idx[i] * h;
        if (l[i] < -1e-15) ok = false;
        l[i] = std::max(l[i], 0.0);
        sum += l[i];
      }
      l[k - 1] = 1.0 - sum;
      if (ok && l[k - 1] >= -1e-15) {
        l[k - 1] = std::max(l[k - 1], 0.0);
        const double f = value(l);
        if (f < best) {
          best = f;
          best_point = l;
        }
      }
      int pos = 0;
      while (pos < k - 1 && ++idx[pos] > steps) idx[pos++] = 0;
      if (pos == k - 1) break;
    }
    center = best_point;
    if (h <= resolution) break;
    half_width = 2.0 * h;
  }
  return best;
}

}  // namespace shqp::testing_util
