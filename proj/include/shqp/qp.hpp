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

// Projection of a point onto a polyhedron given by linear equalities and
// inequalities,
//
//   min_x  1/2 ||x - x0||^2
//   s.t.   <a_k, x>  = b_k   (equality constraints)
//          <a_k, x> <= b_k   (inequality constraints)
//
// solved with a dual active-set method in the Goldfarb-Idnani style. The
// Hessian is the identity, so the dual step reduces to a least-squares solve
// against the active normals: with N the matrix of active normals,
//
//   r = argmin ||N r - a_p||,   z = a_p - N r,
//
// z is the primal step direction and r the change in active multipliers.
// Equalities are made active first, so they hold exactly at every iterate.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shqp/core.hpp"

namespace shqp {

struct LinearConstraint {
  Vector normal;
  double offset = 0.0;
  bool equality = false;
};

enum class QpStatus { kOptimal, kInfeasible };

inline const char* ToString(QpStatus status) {
  return status == QpStatus::kOptimal ? "optimal" : "infeasible";
}

struct QpResult {
  Vector point;
  // Indices into the constraint list, ascending.
  std::vector<int> active_set;
  // One entry per constraint; nonnegative on inequalities, free on
  // equalities, zero on inactive constraints.
  Vector multipliers;
  double kkt_residual = 0.0;
  QpStatus status = QpStatus::kOptimal;
  // Set when status is kInfeasible: mu with sum mu_k a_k = 0 and
  // sum mu_k b_k < 0, mu_k >= 0 on inequalities.
  std::optional<Vector> farkas_certificate;
  int iterations = 0;
};

struct QpOptions {
  // Inequality indices believed active at the solution (e.g. from a previous
  // solve of a closely related problem).
  std::vector<int> warm_start;
};

namespace detail {

class DualActiveSetSolver {
 public:
  DualActiveSetSolver(std::span<const LinearConstraint> constraints,
                      const Vector& x0)
      : x0_(x0) {
    const int k = static_cast<int>(constraints.size());
    normals_.reserve(k);
    for (int i = 0; i < k; ++i) {
      const auto& c = constraints[i];
      CheckDimension(x0.size(), c.normal.size(), "constraint normal");
      const double norm = c.normal.norm();
      if (!(norm > 1e-14) || !std::isfinite(c.offset)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "constraint " + std::to_string(i) +
                        " has a vanishing normal or non-finite offset");
      }
      scale_.push_back(norm);
      normals_.push_back(c.normal / norm);
      offsets_.push_back(c.offset / norm);
      equality_.push_back(c.equality);
    }
    original_.assign(constraints.begin(), constraints.end());
    double max_offset = 0.0;
    for (double b : offsets_) max_offset = std::max(max_offset, std::abs(b));
    feasibility_tol_ = 1e-12 * (1.0 + x0.norm() + max_offset);
    ShadowParallelInequalities();
  }

  QpResult Solve(const QpOptions& options) {
    const int cap = 50 * std::max<int>(1, static_cast<int>(normals_.size()));
    QpResult result;
    if (Run(options.warm_start, /*lowest_index_rule=*/false, cap, result)) {
      return result;
    }
    // Cycling safeguard: cold restart with lowest-index selection.
    if (Run({}, /*lowest_index_rule=*/true, cap, result)) return result;
    throw Error(ErrorCode::kQpNotConverged,
                "dual active-set iteration cap exceeded twice");
  }

 private:
  static constexpr double kDependent = 1e-11;
  static constexpr double kParallel = 1e-10;

  int size() const { return static_cast<int>(normals_.size()); }

  // Same-direction inequalities: only the tighter one can be active.
  void ShadowParallelInequalities() {
    shadow_.assign(size(), -1);
    for (int i = 0; i < size(); ++i) {
      if (equality_[i]) continue;
      for (int j = 0; j < i; ++j) {
        if (equality_[j] || shadow_[j] >= 0) continue;
        if ((normals_[i] - normals_[j]).norm() > kParallel) continue;
        if (offsets_[i] < offsets_[j]) {
          shadow_[j] = i;
        } else {
          shadow_[i] = j;
        }
        break;
      }
    }
  }

  Matrix ActiveMatrix() const {
    Matrix n(x0_.size(), static_cast<Eigen::Index>(active_.size()));
    for (std::size_t c = 0; c < active_.size(); ++c) {
      n.col(static_cast<Eigen::Index>(c)) = normals_[active_[c]];
    }
    return n;
  }

  // r = argmin ||N r - v||, z = v - N r.
  void Decompose(const Vector& v, Vector& r, Vector& z) const {
    if (active_.empty()) {
      r.resize(0);
      z = v;
      return;
    }
    const Matrix n = ActiveMatrix();
    r = n.colPivHouseholderQr().solve(v);
    z = v - n * r;
  }

  double Violation(int p) const { return normals_[p].dot(x_) - offsets_[p]; }

  void FillCertificate(int p, const Vector& r, QpResult& result) const {
    Vector mu = Vector::Zero(size());
    mu[p] = 1.0;
    for (std::size_t c = 0; c < active_.size(); ++c) {
      mu[active_[c]] -= r[static_cast<Eigen::Index>(c)];
    }
    // The combination sums to -violation(p); flip if an equality was
    // violated from below.
    if (Violation(p) < 0.0) mu = -mu;
    for (int i = 0; i < size(); ++i) mu[i] /= scale_[i];
    result.status = QpStatus::kInfeasible;
    result.farkas_certificate = mu;
  }

  void Reset() {
    x_ = x0_;
    active_.clear();
    lambda_.clear();
    redundant_.assign(size(), false);
  }

  // Rebuilds (x, lambda) for the current active set from scratch.
  void Refactor() {
    if (active_.empty()) {
      x_ = x0_;
      lambda_.clear();
      return;
    }
    const Matrix n = ActiveMatrix();
    Vector rhs(static_cast<Eigen::Index>(active_.size()));
    for (std::size_t c = 0; c < active_.size(); ++c) {
      rhs[static_cast<Eigen::Index>(c)] = offsets_[active_[c]];
    }
    const Vector lhs = n.transpose() * x0_ - rhs;
    const Vector lambda = (n.transpose() * n).ldlt().solve(lhs);
    x_ = x0_ - n * lambda;
    lambda_.assign(lambda.data(), lambda.data() + lambda.size());
  }

  bool AddEqualities(QpResult& result) {
    Vector r, z;
    for (int p = 0; p < size(); ++p) {
      if (!equality_[p]) continue;
      Decompose(normals_[p], r, z);
      const double s = Violation(p);
      if (z.norm() <= kDependent) {
        if (std::abs(s) <= feasibility_tol_) {
          redundant_[p] = true;
          continue;
        }
        FillCertificate(p, r, result);
        return false;
      }
      const double t = s / z.squaredNorm();
      x_ -= t * z;
      for (std::size_t c = 0; c < lambda_.size(); ++c) {
        lambda_[c] -= t * r[static_cast<Eigen::Index>(c)];
      }
      active_.push_back(p);
      lambda_.push_back(t);
    }
    return true;
  }

  void ApplyWarmStart(const std::vector<int>& warm) {
    Vector r, z;
    for (int p : warm) {
      if (p < 0 || p >= size() || equality_[p] || shadow_[p] >= 0) continue;
      if (std::find(active_.begin(), active_.end(), p) != active_.end()) {
        continue;
      }
      Decompose(normals_[p], r, z);
      if (z.norm() <= kDependent) continue;
      active_.push_back(p);
    }
    Refactor();
    // Keep dropping the most negative inequality multiplier until the
    // starting point is dual feasible.
    while (true) {
      int worst = -1;
      double most_negative = 0.0;
      for (std::size_t c = 0; c < active_.size(); ++c) {
        if (equality_[active_[c]]) continue;
        if (lambda_[c] < most_negative) {
          most_negative = lambda_[c];
          worst = static_cast<int>(c);
        }
      }
      if (worst < 0) break;
      active_.erase(active_.begin() + worst);
      Refactor();
    }
  }

  int PickViolated(bool lowest_index_rule) const {
    int best = -1;
    double best_violation = feasibility_tol_;
    for (int p = 0; p < size(); ++p) {
      if (equality_[p] || shadow_[p] >= 0) continue;
      if (std::find(active_.begin(), active_.end(), p) != active_.end()) {
        continue;
      }
      const double s = Violation(p);
      if (s > best_violation) {
        best = p;
        best_violation = s;
        if (lowest_index_rule) break;
      }
    }
    return best;
  }

  bool Run(const std::vector<int>& warm, bool lowest_index_rule, int cap,
           QpResult& result) {
    Reset();
    result = QpResult{};
    int iterations = 0;
    if (!AddEqualities(result)) {
      Finish(result, iterations);
      return true;
    }
    if (!warm.empty()) ApplyWarmStart(warm);

    Vector r, z;
    while (true) {
      const int p = PickViolated(lowest_index_rule);
      if (p < 0) break;
      double lambda_p = 0.0;
      while (true) {
        if (++iterations > cap) return false;
        Decompose(normals_[p], r, z);
        double partial = std::numeric_limits<double>::infinity();
        int drop = -1;
        for (std::size_t c = 0; c < active_.size(); ++c) {
          if (equality_[active_[c]]) continue;
          const double rc = r[static_cast<Eigen::Index>(c)];
          if (rc <= 1e-14) continue;
          const double ratio = lambda_[c] / rc;
          if (ratio < partial) {
            partial = ratio;
            drop = static_cast<int>(c);
          }
        }
        const double z2 = z.squaredNorm();
        if (std::sqrt(z2) <= kDependent) {
          if (drop < 0) {
            FillCertificate(p, r, result);
            Finish(result, iterations);
            return true;
          }
          // Dual-only step: shift weight onto p and release `drop`.
          for (std::size_t c = 0; c < lambda_.size(); ++c) {
            lambda_[c] -= partial * r[static_cast<Eigen::Index>(c)];
          }
          lambda_p += partial;
          active_.erase(active_.begin() + drop);
          lambda_.erase(lambda_.begin() + drop);
          continue;
        }
        const double full = Violation(p) / z2;
        const double t = std::min(full, partial);
        x_ -= t * z;
        for (std::size_t c = 0; c < lambda_.size(); ++c) {
          lambda_[c] -= t * r[static_cast<Eigen::Index>(c)];
        }
        lambda_p += t;
        if (full <= partial) {
          active_.push_back(p);
          lambda_.push_back(lambda_p);
          break;
        }
        active_.erase(active_.begin() + drop);
        lambda_.erase(lambda_.begin() + drop);
      }
    }
    Finish(result, iterations);
    return true;
  }

  void Finish(QpResult& result, int iterations) {
    if (result.status == QpStatus::kOptimal) Polish();
    result.point = x_;
    result.iterations = iterations;
    result.multipliers = Vector::Zero(size());
    for (std::size_t c = 0; c < active_.size(); ++c) {
      const int i = active_[c];
      double lambda = lambda_[c];
      if (!equality_[i]) lambda = std::max(lambda, 0.0);
      result.multipliers[i] = lambda / scale_[i];
    }
    result.active_set = active_;
    std::sort(result.active_set.begin(), result.active_set.end());
    result.kkt_residual = KktResidual(result.point, result.multipliers);
  }

  // Recomputes (x, lambda) for the final active set in one solve, which
  // removes drift accumulated by the incremental updates. Stationarity holds
  // by construction there, so the result is kept when it does not raise the
  // primal and complementarity part of the residual. Comparing the full
  // residual would be noise when the multipliers are huge.
  void Polish() {
    if (active_.empty()) return;
    const Vector x_before = x_;
    const std::vector<double> lambda_before = lambda_;
    Vector before = Vector::Zero(size());
    for (std::size_t c = 0; c < active_.size(); ++c) {
      before[active_[c]] = lambda_[c] / scale_[active_[c]];
    }
    const double residual_before = KktResidual(x_, before, false);
    const Matrix n = ActiveMatrix();
    Vector rhs(static_cast<Eigen::Index>(active_.size()));
    for (std::size_t c = 0; c < active_.size(); ++c) {
      rhs[static_cast<Eigen::Index>(c)] = offsets_[active_[c]];
    }
    // N' (x0 - N l) = b with N = QR: R' y = N' x0 - b, x = x0 - Q y and
    // l = R^-1 y. Going through Q keeps the error at cond(N), not cond(N)^2;
    // one refinement pass removes what is left of the residual.
    const Eigen::HouseholderQR<Matrix> qr(n);
    const auto r = qr.matrixQR()
                       .topRows(n.cols())
                       .template triangularView<Eigen::Upper>();
    const Matrix q = qr.householderQ() * Matrix::Identity(n.rows(), n.cols());
    Vector y = r.transpose().solve(n.transpose() * x0_ - rhs);
    x_ = x0_ - q * y;
    const Vector dy = r.transpose().solve(n.transpose() * x_ - rhs);
    y += dy;
    x_ -= q * dy;
    const Vector lambda = r.solve(y);
    lambda_.assign(lambda.data(), lambda.data() + lambda.size());
    Vector after = Vector::Zero(size());
    for (std::size_t c = 0; c < active_.size(); ++c) {
      double l = lambda_[c];
      if (!equality_[active_[c]]) l = std::max(l, 0.0);
      after[active_[c]] = l / scale_[active_[c]];
    }
    if (!(KktResidual(x_, after, false) <= residual_before)) {
      x_ = x_before;
      lambda_ = lambda_before;
    }
  }

  // Max of the stationarity norm, the worst normalized primal violation and
  // the complementarity natural residual max_i |min(lambda_i, -slack_i)|.
  double KktResidual(const Vector& x, const Vector& lambda,
                     bool with_stationarity = true) const {
    Vector stationarity = x - x0_;
    double primal = 0.0;
    double complementarity = 0.0;
    for (int i = 0; i < size(); ++i) {
      const auto& c = original_[i];
      stationarity += lambda[i] * c.normal;
      const double slack = c.normal.dot(x) - c.offset;
      primal = std::max(primal, (equality_[i] ? std::abs(slack)
                                              : std::max(slack, 0.0)) /
                                    scale_[i]);
      if (!equality_[i]) {
        complementarity = std::max(
            complementarity, std::abs(std::min(lambda[i] * scale_[i],
                                               -slack / scale_[i])));
      }
    }
    return std::max({with_stationarity ? stationarity.norm() : 0.0, primal,
                     complementarity});
  }

  Vector x0_;
  std::vector<LinearConstraint> original_;
  std::vector<Vector> normals_;
  std::vector<double> offsets_;
  std::vector<double> scale_;
  std::vector<bool> equality_;
  std::vector<int> shadow_;
  std::vector<bool> redundant_;
  double feasibility_tol_ = 0.0;

  Vector x_;
  std::vector<int> active_;
  std::vector<double> lambda_;
};

}  // namespace detail

// Euclidean projection of x0 onto {x : constraints hold}. Deterministic in
// the order of `constraints`.
inline QpResult ProjectOntoConstraints(
    std::span<const LinearConstraint> constraints, const Vector& x0,
    const QpOptions& options = {}) {
  if (!AllFinite(x0)) {
    throw Error(ErrorCode::kInvalidArgument, "QP start point is not finite");
  }
  if (constraints.empty()) {
    QpResult result;
    result.point = x0;
    result.multipliers = Vector::Zero(0);
    return result;
  }
  detail::DualActiveSetSolver solver(constraints, x0);
  return solver.Solve(options);
}

}  // namespace shqp
