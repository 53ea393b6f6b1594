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

#include "shqp/qp.hpp"

#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "test_util.hpp"

namespace shqp {
namespace {

using testing_util::BruteForceProjection;
using testing_util::Vec;

TEST(QpTest, StrictlyFeasibleStartIsItsOwnProjection) {
  std::vector<LinearConstraint> cs = {{Vec({1.0, 0.0}), 1.0, false},
                                      {Vec({0.0, 1.0}), 1.0, false}};
  const QpResult r = ProjectOntoConstraints(cs, Vec({0.2, -0.3}));
  EXPECT_EQ(r.status, QpStatus::kOptimal);
  EXPECT_TRUE(r.active_set.empty());
  EXPECT_EQ(r.point, Vec({0.2, -0.3}));
  EXPECT_LE(r.kkt_residual, 1e-12);
}

TEST(QpTest, QuadrantCornerHasUnitMultipliers) {
  std::vector<LinearConstraint> cs = {{Vec({1.0, 0.0}), 0.0, false},
                                      {Vec({0.0, 1.0}), 0.0, false}};
  const QpResult r = ProjectOntoConstraints(cs, Vec({1.0, 1.0}));
  ASSERT_EQ(r.status, QpStatus::kOptimal);
  EXPECT_NEAR(r.point.norm(), 0.0, 1e-14);
  EXPECT_EQ(r.active_set, (std::vector<int>{0, 1}));
  EXPECT_NEAR(r.multipliers[0], 1.0, 1e-14);
  EXPECT_NEAR(r.multipliers[1], 1.0, 1e-14);
}

TEST(QpTest, BacktrackExampleFirstStep) {
  std::vector<LinearConstraint> cs = {
      {Vec({0.0, 1.0, 0.0}), 0.0, false},
      {Vec({1.0 / 3.0, -1.0, 0.0}), -2.0, false}};
  const QpResult r = ProjectOntoConstraints(cs, Vec({0.0, 1.0, 0.0}));
  ASSERT_EQ(r.status, QpStatus::kOptimal);
  EXPECT_LE((r.point - Vec({-6.0, 0.0, 0.0})).norm(), 1e-12);
  EXPECT_LE(r.kkt_residual, 1e-12);
}

TEST(QpTest, MultipliersAreInOriginalScale) {
  // Scaling a constraint scales its multiplier inversely.
  std::vector<LinearConstraint> cs = {{Vec({0.0, 10.0}), 0.0, false}};
  const QpResult r = ProjectOntoConstraints(cs, Vec({0.0, 2.0}));
  EXPECT_NEAR(r.multipliers[0], 0.2, 1e-14);
  EXPECT_LE(r.kkt_residual, 1e-13);
}

TEST(QpTest, EqualitiesHoldExactly) {
  std::vector<LinearConstraint> cs = {{Vec({1.0, 1.0, 0.0}), 1.0, true},
                                      {Vec({0.0, 1.0, -1.0}), 0.5, true},
                                      {Vec({1.0, 0.0, 0.0}), 0.2, false}};
  const QpResult r = ProjectOntoConstraints(cs, Vec({3.0, -1.0, 2.0}));
  ASSERT_EQ(r.status, QpStatus::kOptimal);
  EXPECT_NEAR(r.point[0] + r.point[1], 1.0, 1e-14);
  EXPECT_NEAR(r.point[1] - r.point[2], 0.5, 1e-14);
  EXPECT_LE(r.point[0], 0.2 + 1e-14);
  EXPECT_LE(r.kkt_residual, 1e-12);
}

TEST(QpTest, RedundantEqualityIsAccepted) {
  std::vector<LinearConstraint> cs = {{Vec({1.0, 0.0}), 1.0, true},
                                      {Vec({2.0, 0.0}), 2.0, true}};
  const QpResult r = ProjectOntoConstraints(cs, Vec({0.0, 3.0}));
  ASSERT_EQ(r.status, QpStatus::kOptimal);
  EXPECT_LE((r.point - Vec({1.0, 3.0})).norm(), 1e-14);
}

TEST(QpTest, ParallelHyperplanesAreInfeasibleWithCertificate) {
  // Two tangent hyperplanes with distinct offsets: the empty-polyhedron case.
  std::vector<LinearConstraint> cs = {{Vec({0.0, 1.0}), 0.0, true},
                                      {Vec({0.0, 2.0}), 1.0, true}};
  const QpResult r = ProjectOntoConstraints(cs, Vec({0.0, 3.0}));
  ASSERT_EQ(r.status, QpStatus::kInfeasible);
  ASSERT_TRUE(r.farkas_certificate.has_value());
  const Vector& mu = *r.farkas_certificate;
  EXPECT_LE((mu[0] * cs[0].normal + mu[1] * cs[1].normal).norm(), 1e-12);
  EXPECT_LT(mu[0] * cs[0].offset + mu[1] * cs[1].offset, 0.0);
}

TEST(QpTest, OpposingHalfspacesAreInfeasibleWithCertificate) {
  std::vector<LinearConstraint> cs = {{Vec({1.0, 0.0}), -1.0, false},
                                      {Vec({-1.0, 0.0}), -1.0, false},
                                      {Vec({0.0, 1.0}), 5.0, false}};
  const QpResult r = ProjectOntoConstraints(cs, Vec({0.0, 0.0}));
  ASSERT_EQ(r.status, QpStatus::kInfeasible);
  const Vector& mu = *r.farkas_certificate;
  Vector combo = Vector::Zero(2);
  double rhs = 0.0;
  for (int k = 0; k < 3; ++k) {
    EXPECT_GE(mu[k], -1e-12);
    combo += mu[k] * cs[k].normal;
    rhs += mu[k] * cs[k].offset;
  }
  EXPECT_LE(combo.norm(), 1e-9);
  EXPECT_LT(rhs, -1e-9);
}

TEST(QpTest, DuplicateDirectionsKeepTheTighterConstraint) {
  std::vector<LinearConstraint> cs = {{Vec({0.0, 1.0}), 1.0, false},
                                      {Vec({0.0, 3.0}), 0.0, false},
                                      {Vec({0.0, 1.0}), 0.5, false}};
  const QpResult r = ProjectOntoConstraints(cs, Vec({1.0, 2.0}));
  ASSERT_EQ(r.status, QpStatus::kOptimal);
  EXPECT_LE((r.point - Vec({1.0, 0.0})).norm(), 1e-14);
  EXPECT_EQ(r.active_set, (std::vector<int>{1}));
}

TEST(QpTest, WarmStartReachesTheSameSolution) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<LinearConstraint> cs;
    for (int k = 0; k < 6; ++k) {
      cs.push_back({Vec({g(rng), g(rng), g(rng)}), g(rng), false});
    }
    const Vector x0 = 3.0 * Vec({g(rng), g(rng), g(rng)});
    const QpResult cold = ProjectOntoConstraints(cs, x0);
    if (cold.status != QpStatus::kOptimal) continue;
    QpOptions warm;
    warm.warm_start = cold.active_set;
    const QpResult hot = ProjectOntoConstraints(cs, x0, warm);
    ASSERT_EQ(hot.status, QpStatus::kOptimal);
    EXPECT_LE((hot.point - cold.point).norm(), 1e-9);
    EXPECT_LE(hot.iterations, cold.iterations);
    QpOptions noisy;
    noisy.warm_start = {0, 2, 4};
    const QpResult other = ProjectOntoConstraints(cs, x0, noisy);
    EXPECT_LE((other.point - cold.point).norm(), 1e-9);
  }
}

TEST(QpTest, MatchesBruteForceEnumeration) {
  std::mt19937_64 rng(2026);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 4);
  std::uniform_int_distribution<int> dim(1, 3);
  std::bernoulli_distribution equality(0.15);
  int infeasible = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    const int n = dim(rng);
    const int k = count(rng);
    std::vector<LinearConstraint> cs;
    for (int c = 0; c < k; ++c) {
      Vector a(n);
      for (int i = 0; i < n; ++i) a[i] = g(rng);
      cs.push_back({a, g(rng), equality(rng)});
    }
    Vector x0(n);
    for (int i = 0; i < n; ++i) x0[i] = 2.0 * g(rng);
    const auto oracle = BruteForceProjection(cs, x0);
    const QpResult r = ProjectOntoConstraints(cs, x0);
    if (!oracle) {
      ++infeasible;
      EXPECT_EQ(r.status, QpStatus::kInfeasible) << "trial " << trial;
      continue;
    }
    ASSERT_EQ(r.status, QpStatus::kOptimal) << "trial " << trial;
    EXPECT_LE((r.point - *oracle).norm(), 1e-8) << "trial " << trial;
    EXPECT_LE(r.kkt_residual, 1e-9) << "trial " << trial;
  }
  EXPECT_GT(infeasible, 0);
}

TEST(QpTest, RejectsZeroNormal) {
  std::vector<LinearConstraint> cs = {{Vec({0.0, 0.0}), 1.0, false}};
  EXPECT_THROW(ProjectOntoConstraints(cs, Vec({1.0, 1.0})), Error);
}

TEST(QpTest, RejectsDimensionMismatch) {
  std::vector<LinearConstraint> cs = {{Vec({1.0, 0.0, 0.0}), 1.0, false}};
  try {
    ProjectOntoConstraints(cs, Vec({1.0, 1.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

}  // namespace
}  // namespace shqp
