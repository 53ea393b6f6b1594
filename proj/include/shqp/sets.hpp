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

// Projection oracles for closed sets and sampling-based checks of their
// local regularity (super-regularity, supporting hyperplanes, SOSH).
//
// A SetOracle is an immutable value; copies share the underlying model and
// may be used concurrently from several threads.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "shqp/core.hpp"
#include "shqp/qp.hpp"

namespace shqp {

enum class SetKind {
  kHalfspace,
  kHyperplane,
  kAffineSubspace,
  kBall,
  kBox,
  kSphere,
  kLevelSet,        // {x : f(x) <= 0}
  kSmoothManifold,  // {x : f(x) = 0}
  kFixedRank,
  kUnion,
  kPointSet,
  kPolyhedron,
  kIntersection,
};

inline const char* ToString(SetKind kind) {
  switch (kind) {
    case SetKind::kHalfspace:
      return "halfspace";
    case SetKind::kHyperplane:
      return "hyperplane";
    case SetKind::kAffineSubspace:
      return "affine-subspace";
    case SetKind::kBall:
      return "ball";
    case SetKind::kBox:
      return "box";
    case SetKind::kSphere:
      return "sphere";
    case SetKind::kLevelSet:
      return "level-set";
    case SetKind::kSmoothManifold:
      return "smooth-manifold";
    case SetKind::kFixedRank:
      return "fixed-rank";
    case SetKind::kUnion:
      return "union";
    case SetKind::kPointSet:
      return "point-set";
    case SetKind::kPolyhedron:
      return "polyhedron";
    case SetKind::kIntersection:
      return "intersection";
  }
  return "unknown";
}

struct Projection {
  Vector nearest;
  double distance = 0.0;
};

struct QuadricCoefficients {
  Matrix q;  // symmetric
  Vector g;
  double c = 0.0;
};

// A C^2 function with callable gradient and Hessian. Quadrics also carry
// their coefficients, which enables an exact global projection.
struct SmoothFunction {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;
  std::optional<QuadricCoefficients> quadric;
};

// f(x) = 1/2 x'Qx + g'x + c.
inline SmoothFunction Quadric(Matrix q, Vector g, double c) {
  if (q.rows() != q.cols() || q.rows() != g.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "quadric coefficients");
  }
  const Matrix sym = 0.5 * (q + q.transpose());
  return SmoothFunction{
      [sym, g, c](const Vector& x) { return 0.5 * x.dot(sym * x) + g.dot(x) + c; },
      [sym, g](const Vector& x) -> Vector { return sym * x + g; },
      [sym](const Vector&) -> Matrix { return sym; },
      QuadricCoefficients{sym, g, c}};
}

namespace detail {

inline constexpr double kAnalyticTolerance = 1e-10;
inline constexpr double kIterativeTolerance = 1e-8;

class SetModel {
 public:
  virtual ~SetModel() = default;
  virtual int dimension() const = 0;
  virtual SetKind kind() const = 0;
  virtual bool is_manifold() const = 0;
  virtual bool is_convex() const = 0;
  virtual double membership_tolerance() const { return kAnalyticTolerance; }
  virtual Vector Project(const Vector& x) const = 0;
  virtual const SmoothFunction* smooth() const { return nullptr; }
  virtual std::string Describe() const = 0;
};

inline std::string FormatVector(const Vector& v) {
  std::ostringstream out;
  out << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out << ",";
    out << v[i];
  }
  out << ")";
  return out.str();
}

class HalfspaceModel final : public SetModel {
 public:
  HalfspaceModel(Vector a, double b, bool equality)
      : a_(std::move(a)), b_(b), equality_(equality) {
    if (!(a_.norm() > 1e-14)) {
      throw Error(ErrorCode::kInvalidArgument, "halfspace normal vanishes");
    }
  }
  int dimension() const override { return static_cast<int>(a_.size()); }
  SetKind kind() const override {
    return equality_ ? SetKind::kHyperplane : SetKind::kHalfspace;
  }
  bool is_manifold() const override { return equality_; }
  bool is_convex() const override { return true; }
  Vector Project(const Vector& x) const override {
    const double slack = a_.dot(x) - b_;
    if (slack <= 0.0 && !equality_) return x;
    if (slack == 0.0) return x;
    return x - (slack / a_.squaredNorm()) * a_;
  }
  std::string Describe() const override {
    std::ostringstream out;
    out << "<" << FormatVector(a_) << ",x> " << (equality_ ? "=" : "<=") << " "
        << b_;
    return out.str();
  }

 private:
  Vector a_;
  double b_;
  bool equality_;
};

// {x : A x = b}; rows of A need not be independent but must be consistent.
class AffineModel final : public SetModel {
 public:
  AffineModel(Matrix a, Vector b) : a_(std::move(a)), b_(std::move(b)) {
    if (a_.rows() != b_.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "affine rows vs rhs");
    }
    decomposition_ = a_.completeOrthogonalDecomposition();
    const Vector particular = decomposition_.solve(b_);
    if ((a_ * particular - b_).norm() > 1e-9 * (1.0 + b_.norm())) {
      throw Error(ErrorCode::kInvalidArgument, "affine system is inconsistent");
    }
  }
  int dimension() const override { return static_cast<int>(a_.cols()); }
  SetKind kind() const override { return SetKind::kAffineSubspace; }
  bool is_manifold() const override { return true; }
  bool is_convex() const override { return true; }
  Vector Project(const Vector& x) const override {
    const Vector residual = a_ * x - b_;
    if (residual.isZero(0.0)) return x;
    // Minimum-norm correction: x - A^+ (A x - b).
    return x - decomposition_.solve(residual);
  }
  std::string Describe() const override {
    return "affine subspace of codimension <= " + std::to_string(a_.rows());
  }

 private:
  Matrix a_;
  Vector b_;
  Eigen::CompleteOrthogonalDecomposition<Matrix> decomposition_;
};

class BallModel final : public SetModel {
 public:
  BallModel(Vector center, double radius, bool sphere)
      : center_(std::move(center)), radius_(radius), sphere_(sphere) {
    if (!(radius_ >= 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "radius must be nonnegative");
    }
  }
  int dimension() const override { return static_cast<int>(center_.size()); }
  SetKind kind() const override {
    return sphere_ ? SetKind::kSphere : SetKind::kBall;
  }
  bool is_manifold() const override { return sphere_; }
  bool is_convex() const override { return !sphere_ || radius_ == 0.0; }
  Vector Project(const Vector& x) const override {
    const Vector offset = x - center_;
    const double r = offset.norm();
    if (!sphere_ && r <= radius_) return x;
    if (r == 0.0) {
      // Every sphere point is nearest; the lexicographically smallest one is
      // center - radius * e_1.
      Vector y = center_;
      y[0] -= radius_;
      return y;
    }
    if (r == radius_) return x;
    return center_ + (radius_ / r) * offset;
  }
  std::string Describe() const override {
    std::ostringstream out;
    out << (sphere_ ? "sphere" : "ball") << " center " << FormatVector(center_)
        << " radius " << radius_;
    return out.str();
  }

 private:
  Vector center_;
  double radius_;
  bool sphere_;
};

class BoxModel final : public SetModel {
 public:
  BoxModel(Vector lower, Vector upper)
      : lower_(std::move(lower)), upper_(std::move(upper)) {
    CheckDimension(lower_.size(), upper_.size(), "box bounds");
    if ((lower_.array() > upper_.array()).any()) {
      throw Error(ErrorCode::kInvalidArgument, "box lower bound exceeds upper");
    }
  }
  int dimension() const override { return static_cast<int>(lower_.size()); }
  SetKind kind() const override { return SetKind::kBox; }
  bool is_manifold() const override { return false; }
  bool is_convex() const override { return true; }
  Vector Project(const Vector& x) const override {
    return x.cwiseMax(lower_).cwiseMin(upper_);
  }
  std::string Describe() const override {
    return "box " + FormatVector(lower_) + " .. " + FormatVector(upper_);
  }

 private:
  Vector lower_;
  Vector upper_;
};

// Nearest candidate with lexicographic tie-break among equidistant ones.
inline Vector PickNearest(const std::vector<Vector>& candidates,
                          const Vector& x) {
  int best = 0;
  double best_distance = (candidates[0] - x).norm();
  for (int i = 1; i < static_cast<int>(candidates.size()); ++i) {
    const double d = (candidates[i] - x).norm();
    const double tie = 1e-14 * (1.0 + std::max(d, best_distance));
    if (d < best_distance - tie ||
        (std::abs(d - best_distance) <= tie &&
         LexLess(candidates[i], candidates[best]))) {
      best = i;
      best_distance = std::min(d, best_distance);
    }
  }
  return candidates[best];
}

// Polynomials as coefficient vectors, lowest degree first.
using Poly = std::vector<double>;

inline Poly PolyMul(const Poly& a, const Poly& b) {
  Poly out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

inline Poly PolyAdd(Poly a, const Poly& b) {
  if (a.size() < b.size()) a.resize(b.size(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
  return a;
}

// Real roots from the companion matrix eigenvalues.
inline std::vector<double> RealRoots(Poly p) {
  double scale = 0.0;
  for (double c : p) scale = std::max(scale, std::abs(c));
  while (!p.empty() && std::abs(p.back()) <= 1e-13 * scale) p.pop_back();
  std::vector<double> roots;
  if (p.size() < 2) return roots;
  const int degree = static_cast<int>(p.size()) - 1;
  Matrix companion = Matrix::Zero(degree, degree);
  for (int i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < degree; ++i) companion(i, degree - 1) = -p[i] / p.back();
  const Eigen::EigenSolver<Matrix> eig(companion, false);
  for (int i = 0; i < degree; ++i) {
    const auto z = eig.eigenvalues()[i];
    if (std::abs(z.imag()) <= 1e-6 * (1.0 + std::abs(z.real()))) {
      roots.push_back(z.real());
    }
  }
  return roots;
}

// Every nearest-point candidate of x on {1/2 y'Qy + g'y + c = 0}. In the
// eigenbasis Q = V diag(d) V', stationary points are
//
//   y_i(lambda) = (x_i - lambda g_i) / (1 + lambda d_i),
//
// with lambda a root of f(y(lambda)) = 0 (a polynomial once the poles are
// cleared), plus the degenerate case 1 + lambda d_k = 0 where the
// corresponding coordinates are free.
inline std::vector<Vector> QuadricStationaryPoints(
    const QuadricCoefficients& quad, const Vector& x) {
  const Eigen::Index n = x.size();
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(quad.q);
  const Vector d = eig.eigenvalues();
  const Matrix& v = eig.eigenvectors();
  const Vector xh = v.transpose() * x;
  const Vector gh = v.transpose() * quad.g;
  const double scale = 1.0 + xh.norm() + gh.norm();
  auto value = [&](const Vector& yh) {
    return 0.5 * yh.dot(d.cwiseProduct(yh)) + gh.dot(yh) + quad.c;
  };
  std::vector<Vector> out;

  Poly total = {quad.c};
  for (Eigen::Index i = 0; i < n; ++i) {
    total = PolyMul(total, PolyMul({1.0, d[i]}, {1.0, d[i]}));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const Poly numer = {xh[i], -gh[i]};
    Poly term = PolyAdd(PolyMul(PolyMul(numer, numer), {0.5 * d[i]}),
                        PolyMul(PolyMul(numer, {1.0, d[i]}), {gh[i]}));
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != i) term = PolyMul(term, PolyMul({1.0, d[k]}, {1.0, d[k]}));
    }
    total = PolyAdd(total, term);
  }
  for (double lambda : RealRoots(total)) {
    bool pole = false;
    Vector yh(n);
    // A few Newton steps on phi(lambda) = f(y(lambda)).
    for (int iter = 0; iter < 8 && !pole; ++iter) {
      double dphi = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double den = 1.0 + lambda * d[i];
        if (std::abs(den) <= 1e-12) {
          pole = true;
          break;
        }
        yh[i] = (xh[i] - lambda * gh[i]) / den;
        const double dy = -(gh[i] + d[i] * xh[i]) / (den * den);
        dphi += (d[i] * yh[i] + gh[i]) * dy;
      }
      if (pole) break;
      const double phi = value(yh);
      if (dphi == 0.0 || std::abs(phi) <= 1e-16 * scale) break;
      lambda -= phi / dphi;
    }
    if (pole) continue;
    for (Eigen::Index i = 0; i < n; ++i) {
      yh[i] = (xh[i] - lambda * gh[i]) / (1.0 + lambda * d[i]);
    }
    if (yh.allFinite() && std::abs(value(yh)) <= 1e-9 * scale) {
      out.push_back(v * yh);
    }
  }

  const double dmax = d.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (std::abs(d[k]) <= 1e-12 * dmax) continue;
    const double lambda = -1.0 / d[k];
    std::vector<Eigen::Index> free;
    bool consistent = true;
    Vector yh(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(d[i] - d[k]) <= 1e-12 * dmax) {
        free.push_back(i);
        if (std::abs(xh[i] - lambda * gh[i]) > 1e-12 * scale) consistent = false;
        yh[i] = xh[i];
      } else {
        yh[i] = (xh[i] - lambda * gh[i]) / (1.0 + lambda * d[i]);
      }
    }
    if (!consistent || free.front() != k) continue;
    // Along the free coordinates f is (d_k / 2) |y_F - x_F|^2 + const, so
    // every point of a sphere about x_F qualifies.
    const double base = value(yh);
    const double r2 = -2.0 * base / d[k];
    if (r2 < 0.0) continue;
    const double r = std::sqrt(r2);
    for (Eigen::Index i : free) {
      for (double sign : {-1.0, 1.0}) {
        Vector cand = yh;
        cand[i] += sign * r;
        out.push_back(v * cand);
      }
    }
  }
  return out;
}

// Nearest point on {f <= 0} or {f = 0} by Newton's method on the Lagrangian
// stationarity system
//
//   y - x + lambda grad f(y) = 0,   f(y) = 0,
//
// started from y = x with the linearized multiplier, with backtracking on
// the residual norm. Newton may stall or stop at a stationary point that is
// not a local minimizer of the distance (for example above the focal point
// of a parabola); the fallback then walks downhill along the level set with
// a Gauss-Newton retraction and re-runs Newton from there.
class LevelSetModel final : public SetModel {
 public:
  LevelSetModel(int dimension, SmoothFunction f, bool manifold, bool convex,
                std::string label)
      : dimension_(dimension),
        f_(std::move(f)),
        manifold_(manifold),
        convex_(convex),
        label_(std::move(label)) {}

  int dimension() const override { return dimension_; }
  SetKind kind() const override {
    return manifold_ ? SetKind::kSmoothManifold : SetKind::kLevelSet;
  }
  bool is_manifold() const override { return manifold_; }
  bool is_convex() const override { return convex_; }
  double membership_tolerance() const override { return kIterativeTolerance; }
  const SmoothFunction* smooth() const override { return &f_; }
  std::string Describe() const override {
    return label_ + (manifold_ ? " = 0" : " <= 0");
  }

  Vector Project(const Vector& x) const override {
    const double fx = f_.value(x);
    if (!manifold_ && fx <= 0.0) return x;
    if (fx == 0.0) return x;
    if (f_.quadric) {
      const std::vector<Vector> candidates =
          QuadricStationaryPoints(*f_.quadric, x);
      if (!candidates.empty()) return PickNearest(candidates, x);
    }
    const Vector g0 = f_.gradient(x);
    const double lambda0 =
        g0.squaredNorm() > 0.0 ? fx / g0.squaredNorm() : 0.0;
    Vector y = x;
    if (Newton(x, y, lambda0)) return y;
    Vector z = x;
    if (Descend(x, z)) {
      const Vector g = f_.gradient(z);
      y = z;
      if (Newton(x, y, (x - z).dot(g) / g.squaredNorm())) return y;
      y = z;
    }
    throw Error(ErrorCode::kProjectionNotConverged,
                "Newton projection onto " + label_ + " did not converge", y);
  }

 private:
  double Tolerance(const Vector& x) const {
    return 1e-12 * std::max(1.0, x.norm());
  }

  // Newton from (y, lambda); true when it reaches a local minimizer of the
  // distance. y holds the last iterate either way.
  bool Newton(const Vector& x, Vector& y, double lambda) const {
    const int n = dimension_;
    const double tol = Tolerance(x);
    auto residual = [&](const Vector& yy, double ll) {
      Vector r(n + 1);
      r.head(n) = yy - x + ll * f_.gradient(yy);
      r[n] = f_.value(yy);
      return r;
    };
    Vector r = residual(y, lambda);
    for (int iter = 0; iter < 100; ++iter) {
      if (r.norm() <= tol) return IsLocalMinimizer(y, lambda);
      const Vector g = f_.gradient(y);
      Matrix jac = Matrix::Zero(n + 1, n + 1);
      jac.topLeftCorner(n, n) =
          Matrix::Identity(n, n) + lambda * f_.hessian(y);
      jac.topRightCorner(n, 1) = g;
      jac.bottomLeftCorner(1, n) = g.transpose();
      const Vector step = jac.fullPivLu().solve(-r);
      if (!step.allFinite()) return false;
      double alpha = 1.0;
      Vector y_next = y + step.head(n);
      double lambda_next = lambda + step[n];
      Vector r_next = residual(y_next, lambda_next);
      while (!(r_next.norm() <= (1.0 - 1e-4 * alpha) * r.norm()) &&
             alpha > 1e-10) {
        alpha *= 0.5;
        y_next = y + alpha * step.head(n);
        lambda_next = lambda + alpha * step[n];
        r_next = residual(y_next, lambda_next);
      }
      if (!r_next.allFinite()) return false;
      y = std::move(y_next);
      lambda = lambda_next;
      r = std::move(r_next);
    }
    return false;
  }

  // Second-order test: multiplier sign for {f <= 0} and a positive
  // semidefinite Lagrangian Hessian on the tangent space.
  bool IsLocalMinimizer(const Vector& y, double lambda) const {
    if (!manifold_ && lambda < -1e-8) return false;
    const int n = dimension_;
    if (n == 1) return true;
    const Vector g = f_.gradient(y);
    if (!(g.norm() > 0.0)) return false;
    Eigen::HouseholderQR<Matrix> qr(g);
    const Matrix q = qr.householderQ();
    const Matrix z = q.rightCols(n - 1);
    const Matrix h =
        z.transpose() *
        (Matrix::Identity(n, n) + lambda * f_.hessian(y)) * z;
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (h + h.transpose()));
    return eig.eigenvalues().minCoeff() >= -1e-10;
  }

  // Moves y onto the level set along the gradient (Gauss-Newton on f = 0).
  bool Retract(Vector& y) const {
    for (int iter = 0; iter < 100; ++iter) {
      const double v = f_.value(y);
      if (std::abs(v) <= 1e-15 * std::max(1.0, y.norm())) return true;
      const Vector g = f_.gradient(y);
      const double g2 = g.squaredNorm();
      if (!(g2 > 1e-300) || !std::isfinite(g2)) return false;
      y -= (v / g2) * g;
      if (!y.allFinite()) return false;
    }
    return std::abs(f_.value(y)) <= 1e-12 * std::max(1.0, y.norm());
  }

  // Projected-gradient descent of |y - x|^2 / 2 along the level set.
  bool Descend(const Vector& x, Vector& y) const {
    if (!Retract(y)) return false;
    for (int iter = 0; iter < 500; ++iter) {
      const Vector g = f_.gradient(y);
      const Vector u = g.normalized();
      Vector t = (y - x) - u * u.dot(y - x);
      const double tn = t.norm();
      if (tn <= 1e-10 * std::max(1.0, (y - x).norm())) return true;
      const double d0 = (y - x).squaredNorm();
      double alpha = 1.0;
      bool moved = false;
      while (alpha > 1e-12) {
        Vector cand = y - alpha * t;
        if (Retract(cand) &&
            (cand - x).squaredNorm() <= d0 - 1e-4 * alpha * tn * tn) {
          y = std::move(cand);
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) return true;
    }
    return true;
  }

  int dimension_;
  SmoothFunction f_;
  bool manifold_;
  bool convex_;
  std::string label_;
};

// Matrices of shape rows x cols (row-major vectorized) with rank <= r.
class FixedRankModel final : public SetModel {
 public:
  FixedRankModel(int rows, int cols, int rank)
      : rows_(rows), cols_(cols), rank_(rank) {
    if (rows <= 0 || cols <= 0 || rank < 0 || rank > std::min(rows, cols)) {
      throw Error(ErrorCode::kInvalidArgument, "invalid fixed-rank shape");
    }
  }
  int dimension() const override { return rows_ * cols_; }
  SetKind kind() const override { return SetKind::kFixedRank; }
  // Smooth manifold near matrices of rank exactly r.
  bool is_manifold() const override { return true; }
  bool is_convex() const override { return rank_ == 0; }
  Vector Project(const Vector& x) const override {
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>;
    const RowMajor m = Eigen::Map<const RowMajor>(x.data(), rows_, cols_);
    Eigen::JacobiSVD<Matrix> svd(Matrix(m),
                                 Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sigma = svd.singularValues();
    if (sigma.size() <= rank_ ||
        sigma.tail(sigma.size() - rank_).isZero(0.0)) {
      return x;
    }
    // Singular values come sorted descending; keeping the leading block keeps
    // earlier indices on ties.
    const RowMajor truncated = svd.matrixU().leftCols(rank_) *
                               sigma.head(rank_).asDiagonal() *
                               svd.matrixV().leftCols(rank_).transpose();
    return Eigen::Map<const Vector>(truncated.data(), rows_ * cols_);
  }
  std::string Describe() const override {
    return std::to_string(rows_) + "x" + std::to_string(cols_) +
           " matrices of rank <= " + std::to_string(rank_);
  }

 private:
  int rows_;
  int cols_;
  int rank_;
};

class PointSetModel final : public SetModel {
 public:
  explicit PointSetModel(std::vector<Vector> points)
      : points_(std::move(points)) {
    if (points_.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "point set is empty");
    }
    for (const auto& p : points_) {
      CheckDimension(points_[0].size(), p.size(), "point set member");
    }
  }
  int dimension() const override {
    return static_cast<int>(points_[0].size());
  }
  SetKind kind() const override { return SetKind::kPointSet; }
  bool is_manifold() const override { return true; }
  bool is_convex() const override { return points_.size() == 1; }
  Vector Project(const Vector& x) const override {
    return PickNearest(points_, x);
  }
  std::string Describe() const override {
    return std::to_string(points_.size()) + " isolated points";
  }

 private:
  std::vector<Vector> points_;
};

class UnionModel final : public SetModel {
 public:
  explicit UnionModel(std::vector<std::shared_ptr<const SetModel>> members)
      : members_(std::move(members)) {
    if (members_.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "union has no members");
    }
    for (const auto& m : members_) {
      CheckDimension(members_[0]->dimension(), m->dimension(), "union member");
    }
  }
  int dimension() const override { return members_[0]->dimension(); }
  SetKind kind() const override { return SetKind::kUnion; }
  bool is_manifold() const override { return false; }
  bool is_convex() const override {
    return members_.size() == 1 && members_[0]->is_convex();
  }
  double membership_tolerance() const override {
    double tol = kAnalyticTolerance;
    for (const auto& m : members_) tol = std::max(tol, m->membership_tolerance());
    return tol;
  }
  Vector Project(const Vector& x) const override {
    std::vector<Vector> candidates;
    candidates.reserve(members_.size());
    for (const auto& m : members_) candidates.push_back(m->Project(x));
    return PickNearest(candidates, x);
  }
  std::string Describe() const override {
    std::string out = "union of {";
    for (std::size_t i = 0; i < members_.size(); ++i) {
      if (i > 0) out += "; ";
      out += members_[i]->Describe();
    }
    return out + "}";
  }

 private:
  std::vector<std::shared_ptr<const SetModel>> members_;
};

class PolyhedronModel final : public SetModel {
 public:
  explicit PolyhedronModel(std::vector<LinearConstraint> constraints)
      : constraints_(std::move(constraints)) {
    if (constraints_.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "polyhedron has no constraints");
    }
    for (const auto& c : constraints_) {
      CheckDimension(constraints_[0].normal.size(), c.normal.size(),
                     "polyhedron constraint");
    }
  }
  int dimension() const override {
    return static_cast<int>(constraints_[0].normal.size());
  }
  SetKind kind() const override { return SetKind::kPolyhedron; }
  bool is_manifold() const override {
    return std::all_of(constraints_.begin(), constraints_.end(),
                       [](const LinearConstraint& c) { return c.equality; });
  }
  bool is_convex() const override { return true; }
  Vector Project(const Vector& x) const override {
    QpResult qp = ProjectOntoConstraints(constraints_, x);
    if (qp.status != QpStatus::kOptimal) {
      throw Error(ErrorCode::kInvalidArgument, "polyhedron is empty");
    }
    return qp.point;
  }
  std::string Describe() const override {
    return "polyhedron with " + std::to_string(constraints_.size()) +
           " constraints";
  }

 private:
  std::vector<LinearConstraint> constraints_;
};

// Intersection of member sets, projected with Dykstra's alternating
// refinement. Exact for convex members; a local heuristic otherwise.
class IntersectionModel final : public SetModel {
 public:
  explicit IntersectionModel(
      std::vector<std::shared_ptr<const SetModel>> members)
      : members_(std::move(members)) {
    if (members_.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "intersection has no members");
    }
    for (const auto& m : members_) {
      CheckDimension(members_[0]->dimension(), m->dimension(),
                     "intersection member");
    }
  }
  int dimension() const override { return members_[0]->dimension(); }
  SetKind kind() const override { return SetKind::kIntersection; }
  bool is_manifold() const override { return false; }
  bool is_convex() const override {
    return std::all_of(members_.begin(), members_.end(),
                       [](const auto& m) { return m->is_convex(); });
  }
  double membership_tolerance() const override { return kIterativeTolerance; }
  Vector Project(const Vector& x) const override {
    const std::size_t m = members_.size();
    std::vector<Vector> increments(m, Vector::Zero(x.size()));
    Vector y = x;
    for (int sweep = 0; sweep < 20000; ++sweep) {
      const Vector before = y;
      double worst = 0.0;
      for (std::size_t l = 0; l < m; ++l) {
        const Vector shifted = y + increments[l];
        const Vector p = members_[l]->Project(shifted);
        increments[l] = shifted - p;
        y = p;
      }
      for (std::size_t l = 0; l < m; ++l) {
        worst = std::max(worst, (members_[l]->Project(y) - y).norm());
      }
      if ((y - before).norm() <= 1e-14 * (1.0 + y.norm()) && worst <= 1e-11) {
        return y;
      }
    }
    throw Error(ErrorCode::kProjectionNotConverged,
                "Dykstra refinement did not converge", y);
  }
  std::string Describe() const override {
    std::string out = "intersection of {";
    for (std::size_t i = 0; i < members_.size(); ++i) {
      if (i > 0) out += "; ";
      out += members_[i]->Describe();
    }
    return out + "}";
  }

 private:
  std::vector<std::shared_ptr<const SetModel>> members_;
};

}  // namespace detail

class SetOracle {
 public:
  static SetOracle Halfspace(Vector normal, double offset) {
    return SetOracle(std::make_shared<detail::HalfspaceModel>(
        std::move(normal), offset, false));
  }
  static SetOracle Hyperplane(Vector normal, double offset) {
    return SetOracle(std::make_shared<detail::HalfspaceModel>(
        std::move(normal), offset, true));
  }
  static SetOracle Affine(Matrix a, Vector b) {
    return SetOracle(
        std::make_shared<detail::AffineModel>(std::move(a), std::move(b)));
  }
  // The line {p + t d : t real}.
  static SetOracle Line(const Vector& point, const Vector& direction) {
    const int n = static_cast<int>(point.size());
    CheckDimension(n, direction.size(), "line direction");
    const Vector d = direction.normalized();
    // Rows spanning the orthogonal complement of d.
    Matrix basis = Matrix::Identity(n, n) - d * d.transpose();
    Eigen::ColPivHouseholderQR<Matrix> qr(basis);
    const Matrix rows =
        Matrix(qr.householderQ()).leftCols(n - 1).transpose();
    return Affine(rows, rows * point);
  }
  static SetOracle Ball(Vector center, double radius) {
    return SetOracle(
        std::make_shared<detail::BallModel>(std::move(center), radius, false));
  }
  static SetOracle Sphere(Vector center, double radius) {
    return SetOracle(
        std::make_shared<detail::BallModel>(std::move(center), radius, true));
  }
  static SetOracle Box(Vector lower, Vector upper) {
    return SetOracle(
        std::make_shared<detail::BoxModel>(std::move(lower), std::move(upper)));
  }
  static SetOracle LevelSet(int dimension, SmoothFunction f, bool convex,
                            std::string label = "f(x)") {
    return SetOracle(std::make_shared<detail::LevelSetModel>(
        dimension, std::move(f), false, convex, std::move(label)));
  }
  static SetOracle SmoothManifold(int dimension, SmoothFunction f,
                                  std::string label = "f(x)") {
    return SetOracle(std::make_shared<detail::LevelSetModel>(
        dimension, std::move(f), true, false, std::move(label)));
  }
  static SetOracle FixedRank(int rows, int cols, int rank) {
    return SetOracle(
        std::make_shared<detail::FixedRankModel>(rows, cols, rank));
  }
  static SetOracle PointSet(std::vector<Vector> points) {
    return SetOracle(
        std::make_shared<detail::PointSetModel>(std::move(points)));
  }
  static SetOracle Union(const std::vector<SetOracle>& members) {
    return SetOracle(std::make_shared<detail::UnionModel>(Models(members)));
  }
  static SetOracle Polyhedron(std::vector<LinearConstraint> constraints) {
    return SetOracle(
        std::make_shared<detail::PolyhedronModel>(std::move(constraints)));
  }
  static SetOracle Intersection(const std::vector<SetOracle>& members) {
    return SetOracle(
        std::make_shared<detail::IntersectionModel>(Models(members)));
  }

  int dimension() const { return model_->dimension(); }
  SetKind kind() const { return model_->kind(); }
  bool is_manifold() const { return model_->is_manifold(); }
  bool is_convex() const { return model_->is_convex(); }
  double membership_tolerance() const { return model_->membership_tolerance(); }
  const SmoothFunction* smooth_function() const { return model_->smooth(); }
  std::string describe() const { return model_->Describe(); }

  Projection project(const Vector& x) const {
    CheckDimension(dimension(), x.size(), "projection input");
    Vector nearest = model_->Project(x);
    const double distance = (x - nearest).norm();
    return {std::move(nearest), distance};
  }

  double distance(const Vector& x) const { return project(x).distance; }

  bool contains(const Vector& x) const {
    return distance(x) <= membership_tolerance();
  }

 private:
  explicit SetOracle(std::shared_ptr<const detail::SetModel> model)
      : model_(std::move(model)) {}

  static std::vector<std::shared_ptr<const detail::SetModel>> Models(
      const std::vector<SetOracle>& sets) {
    std::vector<std::shared_ptr<const detail::SetModel>> out;
    out.reserve(sets.size());
    for (const auto& s : sets) out.push_back(s.model_);
    return out;
  }

  std::shared_ptr<const detail::SetModel> model_;
};

enum class NormalProvenance { kProjectionResidual, kAnalyticGradient };

struct NormalSample {
  Vector base;
  Vector direction;  // unit length
  NormalProvenance provenance = NormalProvenance::kProjectionResidual;
};

// A unit normal to `set` at the member `base`, oriented by `hint`. Level
// sets use their gradient; every other kind uses the projection residual
// hint - base, which requires base to be a nearest point to hint.
inline NormalSample NormalAt(const SetOracle& set, const Vector& base,
                             const Vector& hint) {
  CheckDimension(set.dimension(), base.size(), "normal base");
  CheckDimension(set.dimension(), hint.size(), "normal hint");
  const Projection at_base = set.project(base);
  if (at_base.distance > set.membership_tolerance()) {
    throw Error(ErrorCode::kInvalidArgument, "normal base is not a member");
  }
  const Vector gap = hint - base;
  const double gap_norm = gap.norm();
  if (gap_norm <= 1e-14) {
    throw Error(ErrorCode::kDegenerateNormal, "hint coincides with base");
  }
  if (const SmoothFunction* f = set.smooth_function()) {
    const Vector g = f->gradient(base);
    const double gn = g.norm();
    if (!(gn > 1e-14)) {
      throw Error(ErrorCode::kDegenerateNormal, "gradient vanishes at base");
    }
    if (!set.is_manifold() && f->value(base) < -set.membership_tolerance()) {
      throw Error(ErrorCode::kDegenerateNormal,
                  "interior point has a trivial normal cone");
    }
    Vector direction = g / gn;
    if (set.is_manifold() && direction.dot(gap) < 0.0) direction = -direction;
    return {base, std::move(direction), NormalProvenance::kAnalyticGradient};
  }
  const double hint_distance = set.distance(hint);
  if (gap_norm > hint_distance + 1e-8 * (1.0 + gap_norm)) {
    throw Error(ErrorCode::kInvalidArgument,
                "base is not a nearest point of the set to hint");
  }
  return {base, gap / gap_norm, NormalProvenance::kProjectionResidual};
}

// Members of set ∩ B(center, radius) and unit normals at them, obtained by
// projecting uniform random points of B(center, 2 radius). Manifolds
// contribute both signs of every residual normal.
struct LocalSample {
  std::vector<Vector> members;
  std::vector<NormalSample> normals;
};

inline Vector UniformInBall(const Vector& center, double radius,
                            std::mt19937_64& rng) {
  std::normal_distribution<double> gaussian(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const Eigen::Index n = center.size();
  Vector direction(n);
  do {
    for (Eigen::Index i = 0; i < n; ++i) direction[i] = gaussian(rng);
  } while (direction.norm() == 0.0);
  direction.normalize();
  const double r =
      radius * std::pow(uniform(rng), 1.0 / static_cast<double>(n));
  return center + r * direction;
}

inline LocalSample SampleNear(const SetOracle& set, const Vector& center,
                              double radius, int sample_count,
                              std::uint64_t seed) {
  CheckDimension(set.dimension(), center.size(), "sample center");
  if (!(radius > 0.0) || sample_count <= 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "sampling needs a positive radius and count");
  }
  if (!set.contains(center)) {
    throw Error(ErrorCode::kInvalidArgument, "sample center is not a member");
  }
  std::mt19937_64 rng(seed);
  LocalSample sample;
  sample.members.push_back(center);
  for (int s = 0; s < sample_count; ++s) {
    const Vector x = UniformInBall(center, 2.0 * radius, rng);
    const Projection p = set.project(x);
    if ((p.nearest - center).norm() > radius) continue;
    sample.members.push_back(p.nearest);
    if (p.distance <= 1e-12 * (1.0 + x.norm())) continue;
    const Vector v = (x - p.nearest) / p.distance;
    sample.normals.push_back({p.nearest, v, NormalProvenance::kProjectionResidual});
    if (set.is_manifold()) {
      sample.normals.push_back(
          {p.nearest, -v, NormalProvenance::kProjectionResidual});
    }
  }
  int distinct = 0;
  for (std::size_t i = 0; i < sample.members.size() && distinct < 2; ++i) {
    bool fresh = true;
    for (std::size_t j = 0; j < i; ++j) {
      if ((sample.members[i] - sample.members[j]).norm() <= 1e-12) {
        fresh = false;
        break;
      }
    }
    if (fresh) ++distinct;
  }
  if (distinct < 2) {
    throw Error(ErrorCode::kInsufficientSamples,
                "fewer than 2 distinct members in the sampling ball");
  }
  return sample;
}

struct SuperRegularityCheck {
  bool holds = true;
  // max <z - y, v> / (||z - y|| ||v||); -inf when no normal was sampled.
  double worst_ratio = -std::numeric_limits<double>::infinity();
};

inline constexpr double kSamplerSlack = 1e-9;

inline SuperRegularityCheck CheckSuperRegular(const SetOracle& set,
                                              const Vector& center,
                                              double delta, double radius,
                                              int sample_count,
                                              std::uint64_t seed) {
  const LocalSample sample = SampleNear(set, center, radius, sample_count, seed);
  SuperRegularityCheck out;
  for (const auto& normal : sample.normals) {
    for (const auto& z : sample.members) {
      const Vector chord = z - normal.base;
      const double length = chord.norm();
      if (length <= 1e-12) continue;
      out.worst_ratio =
          std::max(out.worst_ratio, normal.direction.dot(chord) / length);
    }
  }
  out.holds = out.worst_ratio <= delta + kSamplerSlack;
  return out;
}

struct SoshCheck {
  bool holds = true;
  // max <v, x - xbar> / ||x - xbar||^2; -inf when no normal was sampled.
  double worst_m = -std::numeric_limits<double>::infinity();
};

inline SoshCheck CheckSosh(const SetOracle& set, const Vector& xbar, double m,
                           double radius, int sample_count,
                           std::uint64_t seed) {
  const LocalSample sample = SampleNear(set, xbar, radius, sample_count, seed);
  const double floor = 1e-10 * std::max(1.0, xbar.norm());
  SoshCheck out;
  for (const auto& normal : sample.normals) {
    const Vector offset = normal.base - xbar;
    const double d2 = offset.squaredNorm();
    if (std::sqrt(d2) <= floor) continue;
    out.worst_m = std::max(out.worst_m, normal.direction.dot(offset) / d2);
  }
  out.holds = out.worst_m <= m + kSamplerSlack;
  return out;
}

// max <v, x - xbar> / ||x - xbar|| over sampled normals near xbar; the
// first-order supporting-hyperplane quantity for Clarke-regular sets.
inline double SupportingHyperplaneRatio(const SetOracle& set, const Vector& xbar,
                                        double radius, int sample_count,
                                        std::uint64_t seed) {
  const LocalSample sample = SampleNear(set, xbar, radius, sample_count, seed);
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& normal : sample.normals) {
    const Vector offset = normal.base - xbar;
    const double d = offset.norm();
    if (d <= 1e-12) continue;
    worst = std::max(worst, normal.direction.dot(offset) / d);
  }
  return worst;
}

}  // namespace shqp
