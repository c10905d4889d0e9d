#pragma once

// Constant-curvature model manifolds in their ambient embeddings:
//   sphere      S^d = { p in R^{d+1} : <p,p> = 1 }
//   hyperboloid H^d = { p in R^{d,1} : <p,p>_L = -1, p_{d+1} > 0 }
// All geometry is computed at unit curvature (K = +1 or -1). Problems posed
// at other curvatures are brought here with rescale_to_unit().

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>

#include "geoaccel/errors.hpp"

namespace geoaccel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Sign : int { Spherical = 1, Hyperbolic = -1 };

inline int sign_value(Sign s) { return static_cast<int>(s); }

inline std::string to_string(Sign s) {
  return s == Sign::Spherical ? "spherical" : "hyperbolic";
}

struct CurvatureClass {
  Sign sign = Sign::Hyperbolic;
  double raw_curvature = -1.0;

  /// Builds the class of a manifold with sectional curvature K != 0.
  static CurvatureClass from_curvature(double K) {
    if (!(K != 0.0) || !std::isfinite(K)) {
      throw GeometryError("curvature must be finite and non-zero (flat space is not supported)");
    }
    return {K > 0 ? Sign::Spherical : Sign::Hyperbolic, K};
  }
  static CurvatureClass spherical() { return {Sign::Spherical, 1.0}; }
  static CurvatureClass hyperbolic() { return {Sign::Hyperbolic, -1.0}; }

  int k() const { return sign_value(sign); }
  bool operator==(const CurvatureClass& o) const { return sign == o.sign; }
};

/// Inner product of the ambient space: Euclidean for the sphere, Minkowski
/// (last coordinate negative) for the hyperboloid.
inline double ambient_inner(Sign s, const Vector& a, const Vector& b) {
  const auto n = a.size();
  double v = a.head(n - 1).dot(b.head(n - 1));
  const double last = a(n - 1) * b(n - 1);
  return s == Sign::Spherical ? v + last : v - last;
}

inline constexpr double kUnitTol = 1e-12;
inline constexpr double kTangentTol = 1e-10;
inline constexpr double kDomainTol = 1e-9;

class AmbientPoint {
 public:
  AmbientPoint() = default;

  /// Projects `coords` onto the manifold. Sphere points are normalized;
  /// hyperboloid points keep their spatial part and get the time
  /// coordinate recomputed.
  AmbientPoint(Vector coords, CurvatureClass cls) : coords_(std::move(coords)), cls_(cls) {
    if (coords_.size() < 2) {
      throw GeometryError("ambient point needs at least 2 coordinates");
    }
    if (!coords_.allFinite()) {
      throw GeometryError("ambient point has non-finite coordinates");
    }
    reproject();
  }

  /// The canonical pole (0, ..., 0, 1).
  static AmbientPoint pole(int d, CurvatureClass cls) {
    Vector p = Vector::Zero(d + 1);
    p(d) = 1.0;
    return AmbientPoint(std::move(p), cls);
  }

  const Vector& coords() const { return coords_; }
  const CurvatureClass& curvature() const { return cls_; }
  Sign sign() const { return cls_.sign; }
  int dim() const { return static_cast<int>(coords_.size()) - 1; }

 private:
  void reproject() {
    const auto d = coords_.size() - 1;
    if (cls_.sign == Sign::Spherical) {
      const double n = coords_.norm();
      if (n == 0.0) throw GeometryError("cannot project the zero vector onto the sphere");
      coords_ /= n;
    } else {
      coords_(d) = std::sqrt(1.0 + coords_.head(d).squaredNorm());
    }
  }

  Vector coords_;
  CurvatureClass cls_;
};

class TangentVector {
 public:
  TangentVector() = default;

  /// Projects `vec` onto the tangent space at `base`.
  TangentVector(AmbientPoint base, Vector vec) : base_(std::move(base)), vec_(std::move(vec)) {
    if (vec_.size() != base_.coords().size()) {
      throw GeometryError("tangent vector dimension does not match its base point");
    }
    const Vector& p = base_.coords();
    const double c = ambient_inner(base_.sign(), p, vec_);
    // <p,p> is +1 on the sphere and -1 on the hyperboloid.
    if (base_.sign() == Sign::Spherical) {
      vec_ -= c * p;
    } else {
      vec_ += c * p;
    }
  }

  static TangentVector zero(const AmbientPoint& base) {
    return TangentVector(base, Vector::Zero(base.coords().size()));
  }

  const AmbientPoint& base() const { return base_; }
  const Vector& vec() const { return vec_; }

  double norm() const {
    return std::sqrt(std::max(0.0, ambient_inner(base_.sign(), vec_, vec_)));
  }

  double inner(const TangentVector& o) const { return ambient_inner(base_.sign(), vec_, o.vec_); }

  TangentVector operator-() const { return scaled(-1.0); }
  TangentVector scaled(double s) const {
    TangentVector r = *this;
    r.vec_ *= s;
    return r;
  }
  TangentVector operator+(const TangentVector& o) const {
    TangentVector r = *this;
    r.vec_ += o.vec_;
    return r;
  }

 private:
  AmbientPoint base_;
  Vector vec_;
};

namespace detail {
inline void require_same_class(const AmbientPoint& x, const AmbientPoint& y) {
  if (!(x.curvature() == y.curvature()) || x.coords().size() != y.coords().size()) {
    throw GeometryError("points belong to different manifolds");
  }
}
}  // namespace detail

/// Geodesic distance. Uses the chordal form 2 asin(|x-y|/2) (resp. 2 asinh)
/// which matches arccos<x,y> / arccosh(-<x,y>_L) but stays accurate for
/// nearby points.
inline double distance(const AmbientPoint& x, const AmbientPoint& y) {
  detail::require_same_class(x, y);
  const Vector diff = x.coords() - y.coords();
  double q = ambient_inner(x.sign(), diff, diff);
  // q = 2(1 - <x,y>) on the sphere, 2(-<x,y>_L - 1) on the hyperboloid.
  if (q < -2.0 * kDomainTol) {
    throw GeometryError("distance argument outside the valid range; point invariants are broken");
  }
  q = std::max(q, 0.0);
  const double half_chord = 0.5 * std::sqrt(q);
  if (x.sign() == Sign::Spherical) {
    if (half_chord > 1.0 + kDomainTol) {
      throw GeometryError("distance argument outside the valid range; point invariants are broken");
    }
    return 2.0 * std::asin(std::min(half_chord, 1.0));
  }
  return 2.0 * std::asinh(half_chord);
}

inline AmbientPoint exp_map(const TangentVector& v) {
  const double n = v.norm();
  const AmbientPoint& x = v.base();
  if (n == 0.0) return x;
  if (x.sign() == Sign::Spherical) {
    if (n >= std::numbers::pi) {
      throw GeometryError("exp_map on the sphere requires |v| < pi");
    }
    return AmbientPoint(std::cos(n) * x.coords() + (std::sin(n) / n) * v.vec(), x.curvature());
  }
  return AmbientPoint(std::cosh(n) * x.coords() + (std::sinh(n) / n) * v.vec(), x.curvature());
}

/// Inverse exponential map. Returns the zero vector when y == x.
inline TangentVector log_map(const AmbientPoint& x, const AmbientPoint& y) {
  detail::require_same_class(x, y);
  const double dist = distance(x, y);
  if (dist == 0.0) return TangentVector::zero(x);
  const Vector& p = x.coords();
  const double c = ambient_inner(x.sign(), p, y.coords());
  Vector u = (x.sign() == Sign::Spherical) ? Vector(y.coords() - c * p) : Vector(y.coords() + c * p);
  const double un = std::sqrt(std::max(0.0, ambient_inner(x.sign(), u, u)));
  if (un == 0.0) {
    if (x.sign() == Sign::Spherical && c < 0.0) {
      throw GeometryError("log_map is undefined for antipodal points");
    }
    return TangentVector::zero(x);
  }
  return TangentVector(x, (dist / un) * u);
}

/// Riemannian gradient of x -> d(x, anchor)^2 / 2.
inline TangentVector grad_half_sqdist(const AmbientPoint& x, const AmbientPoint& anchor) {
  return -log_map(x, anchor);
}

/// Radius, smoothness and strong convexity after rescaling a curvature-K
/// problem to curvature sign(K).
struct RescaledProblem {
  double unit_R = 0.0;
  double unit_L = 0.0;
  double unit_mu = 0.0;
  CurvatureClass cls;
};

inline RescaledProblem rescale_to_unit(double K, double R, double L, double mu) {
  const CurvatureClass cls = CurvatureClass::from_curvature(K);
  if (!(R > 0.0)) throw GeometryError("radius must be positive");
  if (!(mu >= 0.0) || !(L >= mu)) throw GeometryError("need L >= mu >= 0");
  const double s = std::sqrt(std::abs(K));
  RescaledProblem out{s * R, L / std::abs(K), mu / std::abs(K), cls};
  if (cls.sign == Sign::Spherical && out.unit_R >= std::numbers::pi / 2) {
    throw GeometryError("sqrt(K) * R must be below pi/2 so the ball stays in an open hemisphere");
  }
  return out;
}

}  // namespace geoaccel
