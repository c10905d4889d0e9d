#pragma once

// Geodesic maps onto a Euclidean ball: the Gnomonic projection for the
// sphere and the Beltrami-Klein projection for hyperbolic space. Both are
// x -> (p_1, ..., p_d) / p_{d+1} after an isometry moves the map center to
// the pole, so straight lines in the ball are exactly the images of
// geodesics.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "geoaccel/manifold.hpp"

namespace geoaccel {

/// Coordinates x~ = h(x) in R^d.
struct MappedPoint {
  Vector coords;
};

/// Constants describing how h distorts distances, inner products and
/// smoothness on a ball of radius R.
struct DeformationConstants {
  double gamma_n = 1.0;
  double gamma_p = 1.0;
  double L_tilde = 0.0;
  double dist_lo = 1.0;
  double dist_hi = 1.0;
};

class MapFrame {
 public:
  MapFrame() = default;

  /// Geodesic map centered at `x0` restricted to the closed ball of radius R.
  /// The isometry is built by Gram-Schmidt in the ambient inner product,
  /// picking seed axes in order of largest residual (ties by index).
  MapFrame(const AmbientPoint& x0, double R) : x0_(x0), R_(R) {
    if (!(R > 0.0) || !std::isfinite(R)) throw GeometryError("map radius must be positive");
    if (x0.sign() == Sign::Spherical && R >= std::numbers::pi / 2) {
      throw GeometryError("spherical map radius must be below pi/2");
    }
    R_tilde_ = x0.sign() == Sign::Spherical ? std::tan(R) : std::tanh(R);
    build_isometry();
  }

  const AmbientPoint& center() const { return x0_; }
  const CurvatureClass& curvature() const { return x0_.curvature(); }
  Sign sign() const { return x0_.sign(); }
  int k() const { return x0_.curvature().k(); }
  int dim() const { return x0_.dim(); }
  double R() const { return R_; }
  double R_tilde() const { return R_tilde_; }

  /// Ambient -> frame coordinates (sends the center to the pole).
  const Matrix& to_frame() const { return to_frame_; }
  const Matrix& from_frame() const { return from_frame_; }

  /// Inverse map without the ball-radius check. Only rejects points outside
  /// the chart itself (|x~| >= 1 for the Klein model).
  AmbientPoint lift(const Vector& xt) const {
    if (xt.size() != dim()) throw GeometryError("mapped point has wrong dimension");
    if (!xt.allFinite()) throw GeometryError("mapped point has non-finite coordinates");
    const double s = 1.0 + k() * xt.squaredNorm();
    if (!(s > 0.0)) throw GeometryError("mapped point lies outside the Klein disk");
    Vector p(dim() + 1);
    p.head(dim()) = xt;
    p(dim()) = 1.0;
    p /= std::sqrt(s);
    return AmbientPoint(from_frame_ * p, curvature());
  }

  bool in_ball(const Vector& xt) const {
    return xt.norm() <= R_tilde_ + kDomainTol * std::max(1.0, R_tilde_);
  }

 private:
  void build_isometry() {
    const int n = dim() + 1;
    const Sign s = sign();
    Matrix basis(n, n);
    basis.col(n - 1) = x0_.coords();
    std::vector<Vector> accepted{x0_.coords()};
    std::vector<double> self{ambient_inner(s, x0_.coords(), x0_.coords())};
    std::vector<bool> used(n, false);
    for (int col = 0; col < n - 1; ++col) {
      int best = -1;
      double best_norm = -1.0;
      Vector best_vec;
      for (int j = 0; j < n; ++j) {
        if (used[j]) continue;
        Vector v = Vector::Unit(n, j);
        for (std::size_t a = 0; a < accepted.size(); ++a) {
          v -= (ambient_inner(s, v, accepted[a]) / self[a]) * accepted[a];
        }
        // Everything orthogonal to x0 is spacelike, so this is a true norm.
        const double nv = std::sqrt(std::max(0.0, ambient_inner(s, v, v)));
        if (nv > best_norm) {
          best_norm = nv;
          best = j;
          best_vec = std::move(v);
        }
      }
      used[best] = true;
      best_vec /= best_norm;
      basis.col(col) = best_vec;
      accepted.push_back(best_vec);
      self.push_back(1.0);
    }
    Matrix G = Matrix::Identity(n, n);
    if (s == Sign::Hyperbolic) G(n - 1, n - 1) = -1.0;
    from_frame_ = basis;
    to_frame_ = G * basis.transpose() * G;
  }

  AmbientPoint x0_;
  double R_ = 0.0;
  double R_tilde_ = 0.0;
  Matrix to_frame_;
  Matrix from_frame_;
};

inline MappedPoint to_ball(const MapFrame& frame, const AmbientPoint& x) {
  if (!(x.curvature() == frame.curvature()) || x.dim() != frame.dim()) {
    throw GeometryError("point does not live on the frame's manifold");
  }
  if (distance(frame.center(), x) > frame.R() + kDomainTol) {
    throw GeometryError("point lies outside the geodesic ball of the map");
  }
  const Vector p = frame.to_frame() * x.coords();
  const int d = frame.dim();
  return {p.head(d) / p(d)};
}

inline AmbientPoint from_ball(const MapFrame& frame, const MappedPoint& xt) {
  if (!frame.in_ball(xt.coords)) {
    throw GeometryError("mapped point lies outside the image ball");
  }
  return frame.lift(xt.coords);
}

/// Distance on the manifold computed from ball coordinates alone:
/// C_K(d) = (1 + K<x,y>) / sqrt((1 + K|x|^2)(1 + K|y|^2)).
/// Evaluated through the complementary sine so that nearby points keep
/// full precision.
inline double mapped_distance(const MapFrame& frame, const MappedPoint& xt, const MappedPoint& yt) {
  const Vector& x = xt.coords;
  const Vector& y = yt.coords;
  const int K = frame.k();
  const Vector delta = y - x;
  const double dd = delta.squaredNorm();
  // |x ^ delta|^2 == |x ^ y|^2
  const double xx = x.squaredNorm();
  const double xd = x.dot(delta);
  const double wedge = std::max(0.0, xx * dd - xd * xd);
  const double cos_num = 1.0 + K * x.dot(y);
  const double denom = (1.0 + K * xx) * (1.0 + K * y.squaredNorm());
  if (!(denom > 0.0)) throw GeometryError("mapped point lies outside the Klein disk");
  if (K == 1) {
    const double sin_num = std::sqrt(dd + wedge);
    return std::atan2(sin_num, cos_num);
  }
  const double sinh_sq = (dd - wedge) / denom;
  if (sinh_sq < -kDomainTol) throw GeometryError("mapped distance argument out of range");
  return std::asinh(std::sqrt(std::max(0.0, sinh_sq)));
}

namespace detail {

/// Radial/tangential split of a tangent vector at a point, both expressed in
/// frame coordinates. `u` is the unit radial direction of x~ in R^d.
struct RadialSplit {
  double r = 0.0;        // |x~|
  Vector u;              // x~/|x~| (empty when r == 0)
  double radial = 0.0;   // component along the unit radial tangent e_1
  Vector tangential;     // component orthogonal to e_1, as a vector of R^d
  Vector head;           // first d frame coordinates of the vector
};

inline RadialSplit split_tangent(const MapFrame& frame, const TangentVector& v) {
  const int d = frame.dim();
  const Vector p = frame.to_frame() * v.base().coords();
  const Vector w = frame.to_frame() * v.vec();
  RadialSplit out;
  out.head = w.head(d);
  const double ph = p.head(d).norm();
  out.r = ph / p(d);
  if (ph == 0.0) return out;
  out.u = p.head(d) / ph;
  // Unit tangent of the geodesic from the center through x, pointing away.
  Vector e1(d + 1);
  e1.head(d) = p(d) * out.u;
  e1(d) = frame.sign() == Sign::Spherical ? -ph : ph;
  out.radial = ambient_inner(frame.sign(), w, e1);
  out.tangential = out.head - out.u.dot(out.head) * out.u;
  return out;
}

}  // namespace detail

/// The vector v~ of R^d with |v~| = |v| whose ray from x~ is the image of
/// the geodesic t -> Exp_x(t v).
inline Vector pushforward_vec(const MapFrame& frame, const TangentVector& v) {
  const double n = v.norm();
  const auto s = detail::split_tangent(frame, v);
  if (n == 0.0) return Vector::Zero(frame.dim());
  if (s.r == 0.0) return s.head;
  const double q = 1.0 + frame.k() * s.r * s.r;
  Vector raw = (q * s.radial) * s.u + std::sqrt(q) * s.tangential;
  const double rn = raw.norm();
  if (rn == 0.0) return Vector::Zero(frame.dim());
  return raw * (n / rn);
}

/// Euclidean gradient of f = F o h^{-1} at x~ = h(x), given the Riemannian
/// gradient of F at x.
inline Vector pullback_gradient(const MapFrame& frame, const TangentVector& gradF) {
  const auto s = detail::split_tangent(frame, gradF);
  if (s.r == 0.0) return s.head;
  const double q = 1.0 + frame.k() * s.r * s.r;
  return (s.radial / q) * s.u + s.tangential / std::sqrt(q);
}

struct SinCos {
  double sin_alpha;
  double cos_alpha;
};

/// Manifold angle at x between the geodesics towards x0 and towards y, given
/// the Euclidean angle alpha~ between x~0 - x~ and y~ - x~ and |x~|.
inline SinCos angle_deformation(double norm_xt, double alpha_tilde, Sign sign) {
  const double Kr2 = sign_value(sign) * norm_xt * norm_xt;
  const double sa = std::sin(alpha_tilde);
  const double ca = std::cos(alpha_tilde);
  const double denom = 1.0 + Kr2 * sa * sa;
  return {sa * std::sqrt((1.0 + Kr2) / denom), ca / std::sqrt(denom)};
}

/// Closed-form deformation constants for the ball of radius frame.R() and an
/// L-smooth objective.
inline DeformationConstants deformation_constants(const MapFrame& frame, double L) {
  if (!(L > 0.0)) throw GeometryError("smoothness constant must be positive");
  const double R = frame.R();
  const double base = std::sqrt(44.0) * L * std::max(1.0, R);
  DeformationConstants c;
  if (frame.sign() == Sign::Hyperbolic) {
    const double ch = std::cosh(R);
    c.gamma_p = 1.0 / (ch * ch * ch);
    c.gamma_n = 1.0 / (ch * ch);
    c.dist_lo = 1.0;
    c.dist_hi = ch * ch;
    c.L_tilde = base * ch * ch * ch * ch;
  } else {
    const double co = std::cos(R);
    c.gamma_p = co * co;
    c.gamma_n = co * co * co;
    c.dist_lo = co * co;
    c.dist_hi = 1.0;
    c.L_tilde = base;
  }
  return c;
}

}  // namespace geoaccel
