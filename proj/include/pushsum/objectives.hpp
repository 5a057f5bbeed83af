#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pushsum/errors.hpp"
#include "pushsum/types.hpp"

namespace pushsum {

/// Convex, Lipschitz f_i : R^d -> R with a subgradient oracle. Implementations are pure and
/// safe to share between threads.
template <typename Scalar = double>
class ConvexObjective {
 public:
  virtual ~ConvexObjective() = default;

  virtual Scalar value(const Vector<Scalar>& z) const = 0;
  virtual Vector<Scalar> subgradient(const Vector<Scalar>& z) const = 0;
  /// Bound on the Euclidean norm of every subgradient.
  virtual Scalar lipschitz() const = 0;
  virtual Index dim() const = 0;
  virtual std::string kind() const = 0;
  /// Center of the objective, when it has one.
  virtual std::optional<Vector<Scalar>> anchor() const { return std::nullopt; }
};

template <typename Scalar = double>
using ObjectivePtr = std::shared_ptr<const ConvexObjective<Scalar>>;

/// f(z) = ||z - a||_1. Subgradient is sign(z - a), 0 at kinks. L = d, which bounds both
/// the l1 and the Euclidean norm of the subgradient.
template <typename Scalar = double>
class AbsObjective final : public ConvexObjective<Scalar> {
 public:
  explicit AbsObjective(Vector<Scalar> a) : a_(std::move(a)) {
    if (a_.size() < 1) throw DomainError("anchor must have dimension >= 1");
  }

  Scalar value(const Vector<Scalar>& z) const override { return (z - a_).template lpNorm<1>(); }
  Vector<Scalar> subgradient(const Vector<Scalar>& z) const override {
    return (z - a_).unaryExpr([](Scalar r) { return r > 0 ? Scalar(1) : (r < 0 ? Scalar(-1) : Scalar(0)); });
  }
  Scalar lipschitz() const override { return Scalar(a_.size()); }
  Index dim() const override { return a_.size(); }
  std::string kind() const override { return "abs"; }
  std::optional<Vector<Scalar>> anchor() const override { return a_; }

 private:
  Vector<Scalar> a_;
};

/// Coordinate-wise Huber loss around a: r^2/2 for |r| <= kappa, kappa(|r| - kappa/2) beyond.
/// The gradient is the clamp of r to [-kappa, kappa], so L = kappa * sqrt(d).
template <typename Scalar = double>
class HuberObjective final : public ConvexObjective<Scalar> {
 public:
  HuberObjective(Vector<Scalar> a, Scalar kappa) : a_(std::move(a)), kappa_(kappa) {
    if (!(kappa > 0)) throw ConfigError("Huber threshold kappa must be positive");
    if (a_.size() < 1) throw DomainError("anchor must have dimension >= 1");
  }

  Scalar value(const Vector<Scalar>& z) const override {
    const Scalar k = kappa_;
    return (z - a_).unaryExpr([k](Scalar r) {
                      const Scalar m = std::abs(r);
                      return m <= k ? Scalar(0.5) * r * r : k * (m - Scalar(0.5) * k);
                    })
        .sum();
  }
  Vector<Scalar> subgradient(const Vector<Scalar>& z) const override {
    return (z - a_).cwiseMax(-kappa_).cwiseMin(kappa_);
  }
  Scalar lipschitz() const override { return kappa_ * std::sqrt(Scalar(a_.size())); }
  Index dim() const override { return a_.size(); }
  std::string kind() const override { return "huber"; }
  std::optional<Vector<Scalar>> anchor() const override { return a_; }
  Scalar kappa() const { return kappa_; }

 private:
  Vector<Scalar> a_;
  Scalar kappa_;
};

/// f(z) = c. Zero subgradient; L = 0.
template <typename Scalar = double>
class ConstantObjective final : public ConvexObjective<Scalar> {
 public:
  ConstantObjective(Index d, Scalar c) : d_(d), c_(c) {}

  Scalar value(const Vector<Scalar>&) const override { return c_; }
  Vector<Scalar> subgradient(const Vector<Scalar>&) const override { return Vector<Scalar>::Zero(d_); }
  Scalar lipschitz() const override { return Scalar(0); }
  Index dim() const override { return d_; }
  std::string kind() const override { return "constant"; }

 private:
  Index d_;
  Scalar c_;
};

template <typename Scalar = double>
ObjectivePtr<Scalar> abs_objective(Vector<Scalar> anchor) {
  return std::make_shared<AbsObjective<Scalar>>(std::move(anchor));
}

template <typename Scalar = double>
ObjectivePtr<Scalar> huber_objective(Vector<Scalar> anchor, Scalar kappa) {
  return std::make_shared<HuberObjective<Scalar>>(std::move(anchor), kappa);
}

template <typename Scalar = double>
ObjectivePtr<Scalar> constant_objective(Index d, Scalar c = 0) {
  return std::make_shared<ConstantObjective<Scalar>>(d, c);
}

/// Minimizer z* of F with F* = F(z*) and how it was obtained.
template <typename Scalar = double>
struct Certificate {
  Vector<Scalar> optimizer;
  Scalar value = 0;
  std::string method;
  bool confident = true;
};

/// F(z) = sum_i f_i(z), one member per node.
template <typename Scalar = double>
class ObjectiveFamily {
 public:
  ObjectiveFamily() = default;
  explicit ObjectiveFamily(std::vector<ObjectivePtr<Scalar>> members) : members_(std::move(members)) {
    if (members_.empty()) throw ConfigError("objective family needs at least one member");
    for (const auto& m : members_)
      if (m->dim() != members_.front()->dim()) throw DimensionError("objectives disagree on dimension");
  }

  Index size() const { return static_cast<Index>(members_.size()); }
  Index dim() const { return members_.front()->dim(); }
  const ConvexObjective<Scalar>& member(Index i) const { return *members_.at(static_cast<std::size_t>(i)); }
  const std::vector<ObjectivePtr<Scalar>>& members() const { return members_; }

  Scalar lipschitz_sum() const {
    Scalar L(0);
    for (const auto& m : members_) L += m->lipschitz();
    return L;
  }

  Scalar value(const Vector<Scalar>& z) const {
    Scalar f(0);
    for (const auto& m : members_) f += m->value(z);
    return f;
  }

  /// Row i is a subgradient of f_i at row i of `points`.
  Matrix<Scalar> subgradients(const Matrix<Scalar>& points) const {
    if (points.rows() != size() || points.cols() != dim()) throw DimensionError("points must be n x d");
    Matrix<Scalar> g(points.rows(), points.cols());
    for (Index i = 0; i < size(); ++i) g.row(i) = member(i).subgradient(points.row(i).transpose()).transpose();
    return g;
  }

  const std::optional<Certificate<Scalar>>& certificate() const { return certificate_; }
  void set_certificate(Certificate<Scalar> c) { certificate_ = std::move(c); }

 private:
  std::vector<ObjectivePtr<Scalar>> members_;
  std::optional<Certificate<Scalar>> certificate_;
};

struct SolverOptions {
  int descent_iterations = 20000;
  int sweeps = 60;
  int bisection_steps = 200;
};

namespace detail {

template <typename Scalar>
Vector<Scalar> coordinate_medians(const std::vector<Vector<Scalar>>& anchors) {
  const Index d = anchors.front().size();
  Vector<Scalar> z(d);
  std::vector<Scalar> column(anchors.size());
  for (Index k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < anchors.size(); ++i) column[i] = anchors[i](k);
    std::sort(column.begin(), column.end());
    const std::size_t m = column.size();
    z(k) = m % 2 == 1 ? column[m / 2] : Scalar(0.5) * (column[m / 2 - 1] + column[m / 2]);
  }
  return z;
}

}  // namespace detail

/// Centralized reference solution. Sums of abs objectives are solved exactly by the
/// coordinate-wise median (midpoint of the two middle anchors for even counts). Anything else
/// uses normalized subgradient descent from the anchor centroid followed by per-coordinate
/// ternary search; the certificate is marked low-confidence if a coordinate probe still
/// finds descent.
template <typename Scalar>
Certificate<Scalar> solve_centralized(const ObjectiveFamily<Scalar>& fam, const SolverOptions& opts = {}) {
  const Index d = fam.dim();
  std::vector<Vector<Scalar>> anchors;
  bool all_abs = true;
  for (const auto& m : fam.members()) {
    all_abs = all_abs && m->kind() == "abs";
    if (auto a = m->anchor()) anchors.push_back(*a);
  }

  if (all_abs) {
    Certificate<Scalar> c;
    c.optimizer = detail::coordinate_medians(anchors);
    c.value = fam.value(c.optimizer);
    c.method = "median";
    return c;
  }

  Vector<Scalar> z = Vector<Scalar>::Zero(d);
  Scalar spread(1);
  if (!anchors.empty()) {
    for (const auto& a : anchors) z += a;
    z /= Scalar(anchors.size());
    for (const auto& a : anchors) spread = std::max(spread, (a - z).template lpNorm<Eigen::Infinity>());
  }

  // Stage 1: normalized subgradient descent with diminishing steps, best iterate kept.
  Vector<Scalar> best = z;
  Scalar best_value = fam.value(z);
  for (int k = 0; k < opts.descent_iterations; ++k) {
    Vector<Scalar> g = Vector<Scalar>::Zero(d);
    for (const auto& m : fam.members()) g += m->subgradient(z);
    const Scalar norm = g.norm();
    if (norm == Scalar(0)) break;
    z -= (spread / std::sqrt(Scalar(k + 1))) * g / norm;
    const Scalar v = fam.value(z);
    if (v < best_value) {
      best_value = v;
      best = z;
    }
  }

  // Stage 2: cyclic ternary search along each coordinate.
  z = best;
  const Scalar radius = spread + Scalar(1);
  for (int sweep = 0; sweep < opts.sweeps; ++sweep) {
    for (Index k = 0; k < d; ++k) {
      Scalar lo = z(k) - radius, hi = z(k) + radius;
      Vector<Scalar> probe = z;
      auto along = [&](Scalar s) {
        probe(k) = s;
        return fam.value(probe);
      };
      for (int step = 0; step < opts.bisection_steps && hi - lo > Scalar(1e-15) * (Scalar(1) + std::abs(lo)); ++step) {
        const Scalar m1 = lo + (hi - lo) / Scalar(3), m2 = hi - (hi - lo) / Scalar(3);
        if (along(m1) <= along(m2)) hi = m2;
        else lo = m1;
      }
      const Scalar candidate = Scalar(0.5) * (lo + hi);
      if (along(candidate) <= fam.value(z)) z(k) = candidate;
    }
  }

  Certificate<Scalar> c;
  c.optimizer = z;
  c.value = fam.value(z);
  c.method = "subgradient+bisection";
  const Scalar tol = Scalar(1e-9) * (Scalar(1) + std::abs(c.value));
  for (Index k = 0; k < d; ++k) {
    for (Scalar sign : {Scalar(-1), Scalar(1)}) {
      Vector<Scalar> probe = z;
      probe(k) += sign * Scalar(1e-6) * (Scalar(1) + std::abs(z(k)));
      if (fam.value(probe) < c.value - tol) c.confident = false;
    }
  }
  return c;
}

}  // namespace pushsum
