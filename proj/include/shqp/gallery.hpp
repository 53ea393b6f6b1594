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

// Named test problems with known geometry, plus a few standalone sets used
// by the regularity samplers.

#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "shqp/core.hpp"
#include "shqp/sets.hpp"
#include "shqp/solvers.hpp"

namespace shqp {

struct GalleryMetadata {
  // Local metric-inequality constant and separation constant at the known
  // solution, when they have a closed form.
  std::optional<double> beta;
  std::optional<double> eta;
  bool convex = false;
  // Every set is a smooth manifold near the known solution.
  bool manifolds = false;
  // Every set has the second-order supporting hyperplane property at the
  // known solution.
  bool sosh = false;
  std::string note;
};

struct GalleryEntry {
  std::string name;
  ProblemInstance problem;
  Vector default_x0;
  GalleryMetadata meta;
};

namespace fixtures {

inline Vector Vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// {x : x2 >= x1^2}.
inline SetOracle ParabolaEpigraph() {
  Matrix q = Matrix::Zero(2, 2);
  q(0, 0) = 2.0;
  return SetOracle::LevelSet(2, Quadric(q, Vec({0.0, -1.0}), 0.0), true,
                             "x1^2 - x2");
}

// {x : x2 >= |x1|^(3/2)}: convex, but without a second-order supporting
// hyperplane at the origin.
inline SetOracle Cusp() {
  SmoothFunction f{
      [](const Vector& x) { return std::pow(std::abs(x[0]), 1.5) - x[1]; },
      [](const Vector& x) -> Vector {
        const double s = x[0] < 0.0 ? -1.0 : 1.0;
        return Vec({1.5 * s * std::sqrt(std::abs(x[0])), -1.0});
      },
      [](const Vector& x) -> Matrix {
        Matrix h = Matrix::Zero(2, 2);
        h(0, 0) = 0.75 / std::sqrt(std::max(std::abs(x[0]), 1e-300));
        return h;
      },
      std::nullopt};
  return SetOracle::LevelSet(2, std::move(f), true, "|x1|^1.5 - x2");
}

// Parabola epigraph intersected with the disk of radius 1 about (1, 0);
// the two boundaries cross transversally at the origin.
inline SetOracle ParabolaDiskIntersection() {
  return SetOracle::Intersection(
      {ParabolaEpigraph(), SetOracle::Ball(Vec({1.0, 0.0}), 1.0)});
}

inline SetOracle LineThroughOrigin(double angle) {
  return SetOracle::Hyperplane(Vec({-std::sin(angle), std::cos(angle)}), 0.0);
}

}  // namespace fixtures

namespace detail {

inline GalleryEntry TwoLines(const std::string& name, double theta) {
  using fixtures::Vec;
  GalleryEntry e;
  e.name = name;
  e.problem.sets = {fixtures::LineThroughOrigin(0.0),
                    fixtures::LineThroughOrigin(theta)};
  e.problem.known_solution = Vec({0.0, 0.0});
  e.problem.intersection = SetOracle::PointSet({Vec({0.0, 0.0})});
  e.default_x0 = Vec({1.0, 0.0});
  const double half = std::min(theta, std::numbers::pi - theta) / 2.0;
  e.meta.beta = 1.0 / std::sin(half);
  e.meta.eta = std::sin(half);
  e.meta.convex = true;
  e.meta.manifolds = true;
  e.meta.sosh = true;
  e.meta.note = "two lines through the origin";
  return e;
}

}  // namespace detail

inline std::vector<std::string> GalleryNames() {
  return {"backtrack-example", "two-lines-45",   "two-lines-theta",
          "circle-line",       "two-parabolas",  "halfspace-pair",
          "rank1-affine",      "two-shqp-wedge", "union-axes"};
}

inline GalleryEntry MakeGalleryEntry(const std::string& name) {
  using fixtures::Vec;
  const double pi = std::numbers::pi;
  const double inf = std::numeric_limits<double>::infinity();
  GalleryEntry e;
  e.name = name;
  if (name == "backtrack-example") {
    const LinearConstraint h1{Vec({0.0, 1.0, 0.0}), 0.0, false};
    const LinearConstraint h2{Vec({1.0 / 3.0, -1.0, 0.0}), -2.0, false};
    const LinearConstraint h3{Vec({-1.0, -1.0, 1.0}), 0.0, false};
    e.problem.sets = {SetOracle::Halfspace(h1.normal, h1.offset),
                      SetOracle::Polyhedron({h2, h3})};
    e.problem.intersection = SetOracle::Polyhedron({h1, h2, h3});
    e.default_x0 = Vec({0.0, 1.0, 0.0});
    e.meta.convex = true;
    e.meta.note = "K1 = H1, K2 = H2 ∩ H3 in R^3; exact SHQP steps raise the "
                  "max-distance merit";
    return e;
  }
  if (name == "two-lines-45") return detail::TwoLines(name, pi / 4.0);
  if (name == "two-lines-theta") return detail::TwoLines(name, pi / 3.0);
  if (name == "circle-line") {
    const Vector solution = Vec({std::sqrt(3.0) / 2.0, 0.5});
    e.problem.sets = {SetOracle::Sphere(Vec({0.0, 0.0}), 1.0),
                      SetOracle::Hyperplane(Vec({0.0, 1.0}), 0.5)};
    e.problem.known_solution = solution;
    e.problem.intersection =
        SetOracle::PointSet({Vec({-std::sqrt(3.0) / 2.0, 0.5}), solution});
    e.default_x0 = Vec({1.5, -0.5});
    // The circle's tangent meets the line at 60 degrees.
    e.meta.beta = 2.0;
    e.meta.eta = 0.5;
    e.meta.manifolds = true;
    e.meta.sosh = true;
    e.meta.note = "unit circle and the line x2 = 1/2, transversal";
    return e;
  }
  if (name == "two-parabolas") {
    Matrix q1 = Matrix::Zero(2, 2);
    q1(0, 0) = 2.0;
    Matrix q2 = Matrix::Zero(2, 2);
    q2(1, 1) = 2.0;
    e.problem.sets = {
        SetOracle::SmoothManifold(2, Quadric(q1, Vec({0.0, -1.0}), 0.0),
                                  "x1^2 - x2"),
        SetOracle::SmoothManifold(2, Quadric(q2, Vec({-1.0, 0.0}), 0.0),
                                  "x2^2 - x1")};
    e.problem.known_solution = Vec({0.0, 0.0});
    e.problem.intersection =
        SetOracle::PointSet({Vec({0.0, 0.0}), Vec({1.0, 1.0})});
    e.default_x0 = Vec({0.3, 0.2});
    e.meta.beta = std::sqrt(2.0);
    e.meta.eta = 1.0 / std::sqrt(2.0);
    e.meta.manifolds = true;
    e.meta.sosh = true;
    e.meta.note = "curves x2 = x1^2 and x1 = x2^2 crossing at the origin";
    return e;
  }
  if (name == "halfspace-pair") {
    e.problem.sets = {SetOracle::Halfspace(Vec({1.0, 0.0}), 0.0),
                      SetOracle::Halfspace(Vec({0.0, 1.0}), 0.0)};
    e.problem.intersection =
        SetOracle::Box(Vec({-inf, -inf}), Vec({0.0, 0.0}));
    e.problem.known_solution = Vec({0.0, 0.0});
    e.default_x0 = Vec({1.0, 1.0});
    e.meta.beta = std::sqrt(2.0);
    e.meta.eta = 1.0 / std::sqrt(2.0);
    e.meta.convex = true;
    e.meta.sosh = true;
    e.meta.note = "the quadrant x1 <= 0, x2 <= 0";
    return e;
  }
  if (name == "rank1-affine") {
    // 2x2 matrices, row-major: rank <= 1 and X11 = X12 = X21 = 1.
    Matrix a = Matrix::Zero(3, 4);
    a(0, 0) = a(1, 1) = a(2, 2) = 1.0;
    const Vector solution = Vec({1.0, 1.0, 1.0, 1.0});
    e.problem.sets = {SetOracle::FixedRank(2, 2, 1),
                      SetOracle::Affine(a, Vec({1.0, 1.0, 1.0}))};
    e.problem.known_solution = solution;
    e.problem.intersection = SetOracle::PointSet({solution});
    e.default_x0 = Vec({1.1, 0.9, 1.05, 1.2});
    // The affine line leaves the rank-1 manifold's tangent space at 30
    // degrees.
    e.meta.beta = 1.0 / std::sin(pi / 12.0);
    e.meta.manifolds = true;
    e.meta.note = "fixed-rank-1 2x2 matrices cut by an affine slice";
    return e;
  }
  if (name == "two-shqp-wedge") {
    const double alpha = pi / 4.0;
    const LinearConstraint k1{Vec({0.0, -1.0}), 0.0, false};
    const LinearConstraint k2{Vec({-std::sin(alpha), std::cos(alpha)}), 0.0,
                              false};
    e.problem.sets = {SetOracle::Halfspace(k1.normal, k1.offset),
                      SetOracle::Halfspace(k2.normal, k2.offset)};
    e.problem.intersection = SetOracle::Polyhedron({k1, k2});
    e.problem.known_solution = Vec({0.0, 0.0});
    e.default_x0 = Vec({-1.0, -1.0});
    e.meta.beta = 1.0 / std::sin(pi / 8.0);
    e.meta.eta = std::sin(pi / 8.0);
    e.meta.convex = true;
    e.meta.sosh = true;
    e.meta.note = "halfspaces x2 >= 0 and x2 <= x1 forming a 45 degree wedge";
    return e;
  }
  if (name == "union-axes") {
    e.problem.sets = {
        SetOracle::Union({SetOracle::Hyperplane(Vec({0.0, 1.0}), 0.0),
                          SetOracle::Hyperplane(Vec({1.0, 0.0}), 0.0)}),
        SetOracle::Hyperplane(Vec({-1.0, 1.0}), 0.0)};
    e.problem.known_solution = Vec({0.0, 0.0});
    e.problem.intersection = SetOracle::PointSet({Vec({0.0, 0.0})});
    e.default_x0 = Vec({0.5, 0.2});
    e.meta.note = "union of the coordinate axes (not Clarke regular at 0) "
                  "and the diagonal";
    return e;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown gallery problem '" + name + "'");
}

inline std::vector<GalleryEntry> Gallery() {
  std::vector<GalleryEntry> out;
  for (const auto& name : GalleryNames()) out.push_back(MakeGalleryEntry(name));
  return out;
}

}  // namespace shqp
