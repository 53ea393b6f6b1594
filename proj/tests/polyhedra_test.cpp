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

#include "shqp/polyhedra.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "test_util.hpp"

namespace shqp {
namespace {

using testing_util::BruteForceProjection;
using testing_util::GridEta;
using testing_util::Vec;

Vector RandomUnit(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v.normalized();
}

TEST(HalfspaceTest, FromProjectionInequality) {
  const auto h = HalfspaceFromProjection(Vec({0.0, 1.0, 0.0}),
                                         Vec({0.0, 0.0, 0.0}), false, 0.0);
  ASSERT_TRUE(h.has_value());
  EXPECT_EQ(h->normal, Vec({0.0, 1.0, 0.0}));
  EXPECT_EQ(h->offset, 0.0);
  EXPECT_FALSE(h->equality);
}

TEST(HalfspaceTest, RelaxedOffset) {
  const auto h =
      HalfspaceFromProjection(Vec({0.0, 2.0}), Vec({0.0, 0.0}), false, 0.5);
  ASSERT_TRUE(h.has_value());
  EXPECT_EQ(h->normal, Vec({0.0, 2.0}));
  EXPECT_DOUBLE_EQ(h->offset, 2.0);
}

TEST(HalfspaceTest, ManifoldGivesHyperplaneAndIgnoresTau) {
  const auto h =
      HalfspaceFromProjection(Vec({2.0, 0.0}), Vec({1.0, 0.0}), true, 0.7);
  ASSERT_TRUE(h.has_value());
  EXPECT_TRUE(h->equality);
  EXPECT_EQ(h->normal, Vec({1.0, 0.0}));
  EXPECT_DOUBLE_EQ(h->offset, 1.0);
}

TEST(HalfspaceTest, ZeroGapIsSignalled) {
  EXPECT_FALSE(HalfspaceFromProjection(Vec({1.0, 2.0}), Vec({1.0, 2.0}),
                                       false, 0.0)
                   .has_value());
}

TEST(HalfspaceTest, TauOutsideRangeIsRejected) {
  EXPECT_THROW(HalfspaceFromProjection(Vec({1.0}), Vec({0.0}), false, 1.0),
               Error);
  EXPECT_THROW(HalfspaceFromProjection(Vec({1.0}), Vec({0.0}), false, -0.1),
               Error);
}

TEST(HalfspaceTest, RelaxedBoundarySitsAtFractionTau) {
  // The relaxed boundary passes through (1-tau) proj + tau x_prev.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector x = Vec({g(rng), g(rng), g(rng)});
    const Vector p = Vec({g(rng), g(rng), g(rng)});
    const double tau = 0.01 * (trial % 100);
    const auto h = HalfspaceFromProjection(x, p, false, tau);
    ASSERT_TRUE(h.has_value());
    EXPECT_NEAR(h->violation((1.0 - tau) * p + tau * x), 0.0,
                1e-12 * (1.0 + x.squaredNorm() + p.squaredNorm()));
    EXPECT_GT(h->violation(x), 0.0);
  }
}

TEST(PolyhedronTest, RejectsTwoConstraintsFromOneSourceAndIteration) {
  Polyhedron p;
  p.Add({Vec({1.0, 0.0}), 0.0, false, {0, 1, 1}});
  p.Add({Vec({0.0, 1.0}), 0.0, false, {1, 1, 1}});
  p.Add({Vec({1.0, 1.0}), 0.0, false, {0, 2, 1}});
  try {
    p.Add({Vec({1.0, -1.0}), 0.0, false, {0, 1, 2}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSourceConflict);
  }
  EXPECT_EQ(p.size(), 3u);
}

TEST(PolyhedronTest, RejectsVanishingNormalAndMixedDimensions) {
  Polyhedron p;
  EXPECT_THROW(p.Add({Vec({0.0, 0.0}), 1.0, false, {}}), Error);
  p.Add({Vec({1.0, 0.0}), 1.0, false, {}});
  EXPECT_THROW(p.Add({Vec({1.0, 0.0, 0.0}), 1.0, false, {}}), Error);
}

TEST(PolyhedronTest, BacktrackExampleProjection) {
  const Polyhedron p({{Vec({0.0, 1.0, 0.0}), 0.0, false, {}},
                      {Vec({1.0 / 3.0, -1.0, 0.0}), -2.0, false, {}}});
  const QpResult r = ProjectOntoPolyhedron(p, Vec({0.0, 1.0, 0.0}));
  ASSERT_EQ(r.status, QpStatus::kOptimal);
  EXPECT_LE((r.point - Vec({-6.0, 0.0, 0.0})).norm(), 1e-12);
}

TEST(PolyhedronTest, QuadrantCorner) {
  const Polyhedron p({{Vec({1.0, 0.0}), 0.0, false, {}},
                      {Vec({0.0, 1.0}), 0.0, false, {}}});
  const QpResult r = ProjectOntoPolyhedron(p, Vec({1.0, 1.0}));
  const auto oracle = BruteForceProjection(p.linear(), Vec({1.0, 1.0}));
  ASSERT_TRUE(oracle.has_value());
  EXPECT_LE((r.point - *oracle).norm(), 1e-14);
  EXPECT_EQ(r.active_set.size(), 2u);
  EXPECT_NEAR(r.multipliers[0], 1.0, 1e-14);
  EXPECT_NEAR(r.multipliers[1], 1.0, 1e-14);
}

TEST(PolyhedronTest, EmptyPolyhedronIsAnError) {
  EXPECT_THROW(ProjectOntoPolyhedron(Polyhedron(), Vec({0.0})), Error);
}

TEST(PolyhedronTest, FejerStepProperty) {
  // Reflections through the projection never move away from feasible points.
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    Polyhedron p;
    for (int k = 0; k < 3; ++k) {
      p.Add({RandomUnit(3, rng), std::abs(g(rng)), false, {}});
    }
    const Vector x = 3.0 * Vec({g(rng), g(rng), g(rng)});
    const QpResult r = ProjectOntoPolyhedron(p, x);
    ASSERT_EQ(r.status, QpStatus::kOptimal);
    for (int s = 0; s < 20; ++s) {
      const Vector y = 2.0 * Vec({g(rng), g(rng), g(rng)});
      bool feasible = true;
      for (const auto& h : p.constraints()) feasible &= h.violation(y) <= 0.0;
      if (!feasible) continue;
      ++checked;
      for (double lambda : {0.0, 0.5, 1.0}) {
        const Vector step = r.point + lambda * (r.point - x);
        EXPECT_LE((y - step).norm(), (y - x).norm() + 1e-12);
      }
    }
  }
  EXPECT_GT(checked, 1000);
}

TEST(DerivedHalfspaceTest, SingleHalfspaceIsReproduced) {
  const Polyhedron p({{Vec({0.0, 2.0}), 1.0, false, {}}});
  const auto h = DerivedHalfspace(p, Vec({3.0, 4.0}));
  ASSERT_TRUE(h.has_value());
  EXPECT_NEAR(std::abs(h->normal.normalized().dot(Vec({0.0, 1.0}))), 1.0,
              1e-14);
  EXPECT_NEAR(h->offset / h->normal.norm(), 0.5, 1e-14);
}

TEST(DerivedHalfspaceTest, QuadrantGivesTheBisector) {
  const Polyhedron p({{Vec({1.0, 0.0}), 0.0, false, {}},
                      {Vec({0.0, 1.0}), 0.0, false, {}}});
  const auto h = DerivedHalfspace(p, Vec({1.0, 1.0}));
  ASSERT_TRUE(h.has_value());
  EXPECT_LE((h->normal.normalized() - Vec({1.0, 1.0}) / std::sqrt(2.0)).norm(),
            1e-14);
  EXPECT_NEAR(h->offset, 0.0, 1e-14);
}

TEST(DerivedHalfspaceTest, InsideIsNoSeparation) {
  const Polyhedron p({{Vec({1.0, 0.0}), 0.0, false, {}}});
  EXPECT_FALSE(DerivedHalfspace(p, Vec({-1.0, 5.0})).has_value());
}

TEST(DerivedHalfspaceTest, QuadrantBoundOnDenseSlabSamples) {
  const Polyhedron p({{Vec({1.0, 0.0}), 0.0, false, {}},
                      {Vec({0.0, 1.0}), 0.0, false, {}}});
  const auto h = DerivedHalfspace(p, Vec({1.0, 1.0}));
  ASSERT_TRUE(h.has_value());
  const double eta = 1.0 / std::sqrt(2.0);
  const double alpha = 0.3;
  const int grid = 200;
  for (int i = 0; i <= grid; ++i) {
    for (int j = 0; j <= grid; ++j) {
      const Vector xbar = Vec({-alpha * i / grid, -alpha * j / grid});
      const double d =
          std::abs(h->normal.dot(xbar) - h->offset) / h->normal.norm();
      EXPECT_LE(d, alpha / eta + 1e-9);
    }
  }
}

TEST(DerivedHalfspaceTest, BoundHoldsOnRandomBundles) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int tested = 0;
  for (int trial = 0; tested < 500 && trial < 20000; ++trial) {
    const int n = 2 + trial % 2;
    const int k = 2 + trial % 3;
    std::vector<Vector> normals;
    for (int c = 0; c < k; ++c) normals.push_back(RandomUnit(n, rng));
    const double eta = Eta(normals);
    if (eta < 0.1) continue;
    Vector xbar(n);
    for (int i = 0; i < n; ++i) xbar[i] = g(rng);
    const double alpha = 0.5 * u(rng);
    Polyhedron p;
    for (const auto& v : normals) {
      p.Add({v, v.dot(xbar) + alpha * u(rng), false, {}});
    }
    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = xbar[i] + 3.0 * g(rng);
    const auto h = DerivedHalfspace(p, x);
    if (!h) continue;
    ++tested;
    const double d = std::abs(h->normal.dot(xbar) - h->offset) / h->normal.norm();
    EXPECT_LE(d, alpha / eta + 1e-9) << "trial " << trial;
  }
  EXPECT_EQ(tested, 500);
}

TEST(EtaTest, Examples) {
  EXPECT_DOUBLE_EQ(Eta({Vec({1.0, 0.0})}), 1.0);
  EXPECT_NEAR(Eta({Vec({1.0, 0.0}), Vec({-1.0, 0.0})}), 0.0, 1e-12);
  EXPECT_NEAR(Eta({Vec({1.0, 0.0}), Vec({0.0, 1.0})}), 1.0 / std::sqrt(2.0),
              1e-12);
  EXPECT_NEAR(GridEta({Vec({1.0, 0.0}), Vec({0.0, 1.0})}, 1e-4),
              1.0 / std::sqrt(2.0), 1e-6);
}

TEST(EtaTest, Errors) {
  EXPECT_THROW(Eta(std::vector<Vector>{}), Error);
  EXPECT_THROW(Eta({Vec({2.0, 0.0})}), Error);
  EXPECT_THROW(Eta({Vec({1.0, 0.0}), Vec({0.0, 0.0, 1.0})}), Error);
}

TEST(EtaTest, MatchesGridSearch) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 3;
    const int k = 1 + trial % 4;
    std::vector<Vector> normals;
    for (int c = 0; c < k; ++c) normals.push_back(RandomUnit(n, rng));
    EXPECT_NEAR(Eta(normals), GridEta(normals, 1e-4), 1e-3) << "trial " << trial;
  }
}

TEST(EtaTest, ProjectedGradientAgreesWithEnumeration) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 3 + trial % 3;
    const int k = 2 + trial % 5;
    Matrix v(n, k);
    for (int c = 0; c < k; ++c) v.col(c) = RandomUnit(n, rng);
    EXPECT_NEAR(detail::EtaByProjectedGradient(v), detail::EtaByEnumeration(v),
                1e-6);
  }
}

TEST(EtaTest, LargeBundleUsesProjectedGradient) {
  // Eight directions in a half-plane cone, all within 30 degrees of e1: the
  // hull is a polygon whose nearest point to 0 is the chord at the edges.
  std::vector<Vector> normals;
  const double spread = std::acos(-1.0) / 6.0;
  for (int c = 0; c < 8; ++c) {
    const double a = -spread + 2.0 * spread * c / 7.0;
    normals.push_back(Vec({std::cos(a), std::sin(a)}));
  }
  EXPECT_NEAR(Eta(normals), std::cos(spread), 1e-8);
}

TEST(EtaTest, AddingANormalNeverIncreasesEta) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + trial % 3;
    std::vector<Vector> normals = {RandomUnit(n, rng)};
    double previous = Eta(normals);
    for (int k = 0; k < 8; ++k) {
      normals.push_back(RandomUnit(n, rng));
      const double next = Eta(normals);
      // Eta is accurate to 1e-8.
      EXPECT_LE(next, previous + 1e-8);
      previous = next;
    }
  }
}

TEST(EtaTest, SimplexProjectionIsOnTheSimplex) {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    Vector y(5);
    for (int i = 0; i < 5; ++i) y[i] = g(rng);
    const Vector p = detail::ProjectOntoSimplex(y);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_GE(p.minCoeff(), 0.0);
    // Variational inequality against the vertices.
    for (int i = 0; i < 5; ++i) {
      const Vector e = Vector::Unit(5, i);
      EXPECT_LE((y - p).dot(e - p), 1e-12);
    }
  }
}

}  // namespace
}  // namespace shqp
