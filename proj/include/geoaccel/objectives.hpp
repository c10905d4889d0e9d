#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "geoaccel/geodesic_map.hpp"
#include "geoaccel/manifold.hpp"

namespace geoaccel {

/// Gradient oracle for a function on the manifold together with its
/// declared constants. Implementations must be pure: the solvers may call
/// them from several threads at once.
class ManifoldObjective {
 public:
  virtual ~ManifoldObjective() = default;

  virtual double value(const AmbientPoint& x) const = 0;
  virtual TangentVector riem_grad(const AmbientPoint& x) const = 0;
  /// Declared L (upper quadratic bound along geodesics).
  virtual double smoothness() const = 0;
  /// Declared mu >= 0 (lower quadratic bound along geodesics).
  virtual double strong_convexity() const = 0;
  virtual std::optional<AmbientPoint> known_minimizer() const { return std::nullopt; }
};

using ObjectivePtr = std::shared_ptr<const ManifoldObjective>;

/// Curvature distortion of the squared-distance regularizer on a set of
/// diameter D with sectional curvature in [K_min, K_max].
struct DeltaConstants {
  double delta_p = 1.0;
  double delta_n = 1.0;
  double D = 0.0;
};

inline DeltaConstants delta_constants(double K_min, double K_max, double D) {
  if (!(K_min <= K_max)) throw GeometryError("need K_min <= K_max");
  if (!(D > 0.0)) throw GeometryError("diameter must be positive");
  DeltaConstants out;
  out.D = D;
  if (K_max > 0.0) {
    const double a = std::sqrt(K_max) * D;
    if (a >= std::numbers::pi / 2) {
      throw GeometryError("sqrt(K_max) * D must be below pi/2");
    }
    out.delta_p = a / std::tan(a);
  }
  if (K_min < 0.0) {
    const double a = std::sqrt(-K_min) * D;
    out.delta_n = a / std::tanh(a);
  }
  return out;
}

/// F(x) = sum_j w_j d(x, a_j)^2 / 2.
class FrechetObjective final : public ManifoldObjective {
 public:
  FrechetObjective(std::vector<AmbientPoint> anchors, std::vector<double> weights, double L,
                   double mu)
      : anchors_(std::move(anchors)), weights_(std::move(weights)), L_(L), mu_(mu) {
    if (anchors_.empty()) throw GeometryError("Frechet objective needs at least one anchor");
    if (anchors_.size() != weights_.size()) {
      throw GeometryError("anchor and weight counts differ");
    }
    double total = 0.0;
    for (double w : weights_) {
      if (!(w > 0.0)) throw GeometryError("Frechet weights must be positive");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw GeometryError("Frechet weights must sum to 1");
    for (const auto& a : anchors_) detail::require_same_class(a, anchors_.front());
    if (!(mu_ >= 0.0) || !(L_ >= mu_)) throw GeometryError("need L >= mu >= 0");
  }

  /// Constants from the squared-distance distortion bounds on a ball of
  /// radius R (diameter 2R), scaled by the total weight.
  static std::shared_ptr<FrechetObjective> on_ball(std::vector<AmbientPoint> anchors,
                                                   std::vector<double> weights, double R) {
    const double K = anchors.front().curvature().k();
    const auto delta = delta_constants(K, K, 2.0 * R);
    return std::make_shared<FrechetObjective>(std::move(anchors), std::move(weights),
                                              delta.delta_n, delta.delta_p);
  }

  double value(const AmbientPoint& x) const override {
    double v = 0.0;
    for (std::size_t j = 0; j < anchors_.size(); ++j) {
      const double dj = distance(x, anchors_[j]);
      v += 0.5 * weights_[j] * dj * dj;
    }
    return v;
  }

  TangentVector riem_grad(const AmbientPoint& x) const override {
    Vector g = Vector::Zero(x.coords().size());
    for (std::size_t j = 0; j < anchors_.size(); ++j) {
      g -= weights_[j] * log_map(x, anchors_[j]).vec();
    }
    return TangentVector(x, std::move(g));
  }

  double smoothness() const override { return L_; }
  double strong_convexity() const override { return mu_; }

  std::optional<AmbientPoint> known_minimizer() const override {
    if (anchors_.size() == 1) return anchors_.front();
    return std::nullopt;
  }

  const std::vector<AmbientPoint>& anchors() const { return anchors_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<AmbientPoint> anchors_;
  std::vector<double> weights_;
  double L_;
  double mu_;
};

/// Wraps an objective and replaces its declared constants. Used to treat a
/// strongly g-convex function as merely g-convex (mu = 0) or to hand a
/// solver a looser smoothness bound.
class DeclaredConstants final : public ManifoldObjective {
 public:
  DeclaredConstants(ObjectivePtr inner, double L, double mu)
      : inner_(std::move(inner)), L_(L), mu_(mu) {
    if (!(mu_ >= 0.0) || !(L_ >= mu_) || !(L_ > 0.0)) {
      throw GeometryError("need L > 0 and L >= mu >= 0");
    }
  }
  double value(const AmbientPoint& x) const override { return inner_->value(x); }
  TangentVector riem_grad(const AmbientPoint& x) const override { return inner_->riem_grad(x); }
  double smoothness() const override { return L_; }
  double strong_convexity() const override { return mu_; }
  std::optional<AmbientPoint> known_minimizer() const override {
    return inner_->known_minimizer();
  }

 private:
  ObjectivePtr inner_;
  double L_;
  double mu_;
};

inline ObjectivePtr with_constants(ObjectivePtr inner, double L, double mu) {
  return std::make_shared<DeclaredConstants>(std::move(inner), L, mu);
}

/// F(x) + (mu_i / 2) d(x, center)^2.
class RegularizedObjective final : public ManifoldObjective {
 public:
  RegularizedObjective(ObjectivePtr inner, double mu_i, AmbientPoint center, DeltaConstants delta)
      : inner_(std::move(inner)), mu_i_(mu_i), center_(std::move(center)), delta_(delta) {
    if (!(mu_i_ >= 0.0)) throw GeometryError("regularization weight must be non-negative");
  }

  double value(const AmbientPoint& x) const override {
    const double d = distance(x, center_);
    return inner_->value(x) + 0.5 * mu_i_ * d * d;
  }
  TangentVector riem_grad(const AmbientPoint& x) const override {
    return inner_->riem_grad(x) + grad_half_sqdist(x, center_).scaled(mu_i_);
  }
  double smoothness() const override { return inner_->smoothness() + mu_i_ * delta_.delta_n; }
  double strong_convexity() const override {
    return inner_->strong_convexity() + mu_i_ * delta_.delta_p;
  }
  std::optional<AmbientPoint> known_minimizer() const override {
    if (mu_i_ == 0.0) return inner_->known_minimizer();
    return std::nullopt;
  }

  double mu_i() const { return mu_i_; }
  const AmbientPoint& center() const { return center_; }

 private:
  ObjectivePtr inner_;
  double mu_i_;
  AmbientPoint center_;
  DeltaConstants delta_;
};

inline std::shared_ptr<RegularizedObjective> regularized(ObjectivePtr obj, double mu_i,
                                                         const AmbientPoint& center,
                                                         const DeltaConstants& delta) {
  return std::make_shared<RegularizedObjective>(std::move(obj), mu_i, center, delta);
}

/// f = F o h^{-1} on the ball of a map frame.
class MappedObjective {
 public:
  MappedObjective(ObjectivePtr inner, MapFrame frame)
      : inner_(std::move(inner)), frame_(std::move(frame)) {}

  const MapFrame& frame() const { return frame_; }
  const ManifoldObjective& inner() const { return *inner_; }
  const ObjectivePtr& inner_ptr() const { return inner_; }

  double value(const Vector& xt) const { return inner_->value(frame_.lift(xt)); }

  Vector grad(const Vector& xt) const {
    return pullback_gradient(frame_, inner_->riem_grad(frame_.lift(xt)));
  }

  struct ValueGrad {
    double value;
    Vector grad;
  };
  ValueGrad value_grad(const Vector& xt) const {
    const AmbientPoint x = frame_.lift(xt);
    return {inner_->value(x), pullback_gradient(frame_, inner_->riem_grad(x))};
  }

 private:
  ObjectivePtr inner_;
  MapFrame frame_;
};

/// Checked variants: reject points outside the image ball X.
inline double value_mapped(const MappedObjective& obj, const MappedPoint& xt) {
  return obj.inner().value(from_ball(obj.frame(), xt));
}

inline Vector grad_mapped(const MappedObjective& obj, const MappedPoint& xt) {
  return pullback_gradient(obj.frame(), obj.inner().riem_grad(from_ball(obj.frame(), xt)));
}

}  // namespace geoaccel
