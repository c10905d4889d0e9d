#pragma once

// Sampled property suites for the geometry and the deformation bounds.
// Each check records the worst slack (allowed minus observed, negative
// means violated) over its samples. Used by `bench verify` and the tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "geoaccel/geodesic_map.hpp"
#include "geoaccel/io.hpp"
#include "geoaccel/manifold.hpp"
#include "geoaccel/objectives.hpp"

namespace geoaccel {

struct GridCell {
  Sign sign = Sign::Hyperbolic;
  int d = 2;
  double R = 1.0;
};

inline std::string describe(const GridCell& c) {
  std::string r = std::to_string(c.R);
  r.erase(r.find_last_not_of('0') + 1);
  if (r.back() == '.') r.pop_back();
  return std::string(c.sign == Sign::Spherical ? "S" : "H") + " d=" + std::to_string(c.d) +
         " R=" + r;
}

/// K in {+1,-1} x d in {2,5,10} x three radii per sign.
inline std::vector<GridCell> default_grid() {
  std::vector<GridCell> out;
  for (Sign s : {Sign::Hyperbolic, Sign::Spherical}) {
    const std::vector<double> radii = s == Sign::Hyperbolic ? std::vector<double>{0.3, 1.0, 1.5}
                                                            : std::vector<double>{0.3, 1.0, 1.4};
    for (int d : {2, 5, 10}) {
      for (double R : radii) out.push_back({s, d, R});
    }
  }
  return out;
}

struct CheckResult {
  std::string name;
  double tolerance = 0.0;
  std::size_t samples = 0;
  std::size_t violations = 0;
  double worst_slack = std::numeric_limits<double>::infinity();

  void add(double slack) {
    ++samples;
    if (!(slack >= 0.0)) ++violations;
    if (std::isnan(slack)) {
      worst_slack = slack;
    } else if (!std::isnan(worst_slack)) {
      worst_slack = std::min(worst_slack, slack);
    }
  }
  /// Records observed <= bound.
  void upper(double observed, double bound) { add(bound - observed); }
  bool ok() const { return violations == 0 && samples > 0; }
};

struct SuiteResult {
  std::string suite;
  GridCell cell;
  std::vector<CheckResult> checks;
  // Extremes of the inner-product ratio (sandwich suite only).
  double ratio_min = std::numeric_limits<double>::infinity();
  double ratio_max = -std::numeric_limits<double>::infinity();

  CheckResult& check(const std::string& name, double tol = 0.0) {
    for (auto& c : checks) {
      if (c.name == name) return c;
    }
    checks.push_back({name, tol});
    return checks.back();
  }
  const CheckResult* find(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.ok(); });
  }
};

namespace detail {

inline std::uint64_t cell_seed(std::uint64_t seed, const GridCell& c, std::uint64_t salt) {
  std::uint64_t h = seed * 0x9e3779b97f4a7c15ULL;
  h ^= static_cast<std::uint64_t>(c.d) * 0xbf58476d1ce4e5b9ULL;
  h ^= static_cast<std::uint64_t>(std::llround(c.R * 1000.0)) * 0x94d049bb133111ebULL;
  h ^= (c.sign == Sign::Spherical ? 1ULL : 2ULL) << 40;
  return h ^ salt;
}

inline CurvatureClass class_of(Sign s) {
  return s == Sign::Spherical ? CurvatureClass::spherical() : CurvatureClass::hyperbolic();
}

/// Point of the R-ball around x0. Half the draws are pushed to the outer
/// fifth of the ball, where the deformation is largest.
inline AmbientPoint sample_ball(const AmbientPoint& x0, double R, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double u = u01(rng);
  const double r = u01(rng) < 0.5 ? R * std::pow(u, 1.0 / x0.dim()) : R * (0.8 + 0.2 * u);
  return exp_map(random_tangent(x0, r, rng));
}

/// Chart coordinates without the ball check.
inline Vector chart(const MapFrame& frame, const AmbientPoint& x) {
  const Vector p = frame.to_frame() * x.coords();
  return p.head(frame.dim()) / p(frame.dim());
}

inline double angle_between(const Vector& a, const Vector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  const double c = a.dot(b);
  const double s = std::sqrt(std::max(0.0, na * na * nb * nb - c * c));
  return std::atan2(s, c);
}

}  // namespace detail

/// Identities of the model manifolds and the geodesic map.
inline SuiteResult geometry_suite(const GridCell& cell, std::size_t n, std::uint64_t seed) {
  SuiteResult out{"geometry", cell, {}};
  std::mt19937_64 rng(detail::cell_seed(seed, cell, 1));
  const auto cls = detail::class_of(cell.sign);
  const auto x0 = random_in_ball(AmbientPoint::pole(cell.d, cls), 1.0, rng);
  const MapFrame frame(x0, cell.R);
  const auto consts = deformation_constants(frame, 1.0);
  const int K = frame.k();

  {
    const int m = cell.d + 1;
    Matrix G = Matrix::Identity(m, m);
    if (cell.sign == Sign::Hyperbolic) G(m - 1, m - 1) = -1.0;
    const Vector pole = AmbientPoint::pole(cell.d, cls).coords();
    auto& c = out.check("frame_isometry", 1e-10);
    c.upper((frame.to_frame() * x0.coords() - pole).cwiseAbs().maxCoeff(), c.tolerance);
    c.upper((frame.from_frame().transpose() * G * frame.from_frame() - G).cwiseAbs().maxCoeff(),
            c.tolerance);
    c.upper((frame.to_frame().transpose() * G * frame.to_frame() - G).cwiseAbs().maxCoeff(),
            c.tolerance);
    auto& rt = out.check("radius_image", 1e-9);
    Vector e = Vector::Zero(cell.d);
    e(0) = frame.R_tilde();
    rt.upper(std::abs(distance(from_ball(frame, {e}), x0) - cell.R), rt.tolerance);
  }

  for (std::size_t s = 0; s < n; ++s) {
    const auto x = detail::sample_ball(x0, cell.R, rng);
    const auto y = detail::sample_ball(x0, cell.R, rng);
    const auto z = detail::sample_ball(x0, cell.R, rng);
    const double dxy = distance(x, y);
    const MappedPoint xt = to_ball(frame, x);
    const MappedPoint yt = to_ball(frame, y);

    out.check("manifold_invariant", 1e-12)
        .upper(std::abs(ambient_inner(x.sign(), x.coords(), x.coords()) - K), 1e-12);
    out.check("mapped_distance", 1e-9).upper(std::abs(mapped_distance(frame, xt, yt) - dxy), 1e-9);
    out.check("ball_roundtrip", 1e-10).upper(distance(from_ball(frame, xt), x), 1e-10);
    out.check("in_ball", 1e-9).upper(xt.coords.norm(), frame.R_tilde() + 1e-9);

    const auto v = log_map(x, y);
    out.check("log_norm", 1e-10).upper(std::abs(v.norm() - dxy), 1e-10);
    out.check("exp_log_roundtrip", 1e-9).upper(distance(exp_map(v), y), 1e-9);
    out.check("tangent_invariant", 1e-10)
        .upper(std::abs(ambient_inner(x.sign(), x.coords(), v.vec())) / std::max(1.0, v.norm()),
               1e-10);
    out.check("symmetry", 1e-12).upper(std::abs(dxy - distance(y, x)), 1e-12);
    out.check("triangle", 1e-9).upper(distance(x, z), dxy + distance(y, z) + 1e-9);

    const double euc = (yt.coords - xt.coords).norm();
    if (euc > 1e-12) {
      const double ratio = dxy / euc;
      auto& c = out.check("distance_deformation", 1e-9);
      c.add(std::min(ratio - consts.dist_lo * (1.0 - 1e-9), consts.dist_hi * (1.0 + 1e-9) - ratio));
    }

    // Angle at x between the geodesics towards x0 and towards y.
    const double r = xt.coords.norm();
    if (r > 1e-6 && euc > 1e-6) {
      const Vector a = -xt.coords;
      const Vector b = yt.coords - xt.coords;
      const double alpha_t = detail::angle_between(a, b);
      const auto sc = angle_deformation(r, alpha_t, cell.sign);
      const auto u = log_map(x, x0);
      const double cm = u.inner(v) / (u.norm() * v.norm());
      const double sm = std::sqrt(std::max(0.0, 1.0 - cm * cm));
      auto& c = out.check("angle_deformation", 1e-8);
      c.upper(std::max(std::abs(sc.sin_alpha - sm), std::abs(sc.cos_alpha - cm)), 1e-8);
      out.check("angle_unit", 1e-12)
          .upper(std::abs(sc.sin_alpha * sc.sin_alpha + sc.cos_alpha * sc.cos_alpha - 1.0), 1e-12);
    }

    // Pushforward: norm preserved, direction of the mapped geodesic.
    const auto w = random_tangent(x, 1.0, rng);
    const Vector wt = pushforward_vec(frame, w);
    out.check("pushforward_norm", 1e-12).upper(std::abs(wt.norm() - 1.0), 1e-12);
    const Vector step = detail::chart(frame, exp_map(w.scaled(1e-4))) - xt.coords;
    out.check("pushforward_direction", 1e-6).upper(detail::angle_between(step, wt), 1e-6);

    // Vectors normal to a gradient stay normal to the pulled-back gradient.
    const auto g = random_tangent(x, 1.0, rng);
    TangentVector q = random_tangent(x, 1.0, rng);
    q = q + g.scaled(-q.inner(g));
    if (q.norm() > 1e-6) {
      const Vector qt = pushforward_vec(frame, q);
      const Vector gt = pullback_gradient(frame, g);
      out.check("gradient_normal", 1e-8).upper(std::abs(qt.dot(gt)), 1e-8 * qt.norm() * gt.norm());
    }
  }
  return out;
}

/// Frechet instance whose anchors keep every point of the R-ball inside the
/// region where the half squared distances are g-convex.
inline std::shared_ptr<FrechetObjective> convex_test_objective(const AmbientPoint& x0, double R,
                                                               std::size_t count,
                                                               std::mt19937_64& rng) {
  const double spread =
      x0.sign() == Sign::Spherical ? std::min(R, std::max(0.0, std::numbers::pi / 2 - R - 0.05)) : R;
  std::vector<AmbientPoint> anchors;
  for (std::size_t j = 0; j < count; ++j) anchors.push_back(random_in_ball(x0, spread, rng));
  auto w = make_weights(WeightScheme::Random, count, rng());
  const auto delta = delta_constants(x0.curvature().k(), x0.curvature().k(), R + spread);
  return std::make_shared<FrechetObjective>(std::move(anchors), std::move(w), delta.delta_n,
                                            delta.delta_p);
}

/// Inner-product ratio sandwich, the relaxed convexity lower bounds, the
/// Frechet constants and the Euclidean smoothness bound of the pullback.
inline SuiteResult sandwich_suite(const GridCell& cell, std::size_t n, std::uint64_t seed) {
  SuiteResult out{"sandwich", cell, {}};
  std::mt19937_64 rng(detail::cell_seed(seed, cell, 2));
  const auto cls = detail::class_of(cell.sign);
  const auto x0 = random_in_ball(AmbientPoint::pole(cell.d, cls), 1.0, rng);
  const MapFrame frame(x0, cell.R);
  const auto F = convex_test_objective(x0, cell.R, 4, rng);
  const MappedObjective f(F, frame);
  const auto c = deformation_constants(frame, F->smoothness());

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t s = 0; s < n; ++s) {
    AmbientPoint x = detail::sample_ball(x0, cell.R, rng);
    AmbientPoint y = detail::sample_ball(x0, cell.R, rng);
    if (s % 4 == 3) {
      // Pairs on one geodesic through x0, often with an end point near the
      // boundary; the extremes of the ratio live on such lines.
      const auto u = random_tangent(x0, 1.0, rng);
      const auto offset = [&] {
        const double a = u01(rng);
        if (u01(rng) < 0.5) return 2.0 * a - 1.0;
        return (u01(rng) < 0.5 ? -1.0 : 1.0) * (0.9 + 0.1 * a);
      };
      x = exp_map(u.scaled(cell.R * offset()));
      y = exp_map(u.scaled(cell.R * offset()));
    }
    const Vector xt = to_ball(frame, x).coords;
    const Vector yt = to_ball(frame, y).coords;
    const auto gF = F->riem_grad(x);
    const auto vg = f.value_grad(xt);
    const double fx = vg.value;
    const double fy = f.value(yt);
    const Vector dy = yt - xt;
    const double den = vg.grad.dot(dy);
    const double num = gF.inner(log_map(x, y));

    // The ratio is a property of the two directional derivatives; skip
    // near-orthogonal draws where both are rounding noise.
    if (std::abs(den) > 1e-6 * vg.grad.norm() * dy.norm()) {
      const double ratio = num / den;
      out.ratio_min = std::min(out.ratio_min, ratio);
      out.ratio_max = std::max(out.ratio_max, ratio);
      out.check("distance_ratio", 1e-9)
          .add(std::min(ratio - c.gamma_p * (1.0 - 1e-9), (1.0 / c.gamma_n) * (1.0 + 1e-9) - ratio));
    }
    const double tol = 1e-12 * (1.0 + std::abs(fx) + std::abs(fy));
    if (den <= 0.0) {
      out.check("sandwich_lower_nonpositive", 1e-12).add(fy - (fx + den / c.gamma_n) + tol);
    } else {
      out.check("sandwich_lower_positive", 1e-12).add(fy - (fx + c.gamma_p * den) + tol);
    }

    const double d2 = std::pow(distance(x, y), 2);
    const double Fx = F->value(x);
    const double Fy = F->value(y);
    const double ftol = 1e-12 * (1.0 + std::abs(Fx) + std::abs(Fy));
    out.check("smoothness_upper", 1e-12).upper(Fy, Fx + num + 0.5 * F->smoothness() * d2 + ftol);
    out.check("strong_convexity_lower", 1e-12).upper(Fx + num + 0.5 * F->strong_convexity() * d2, Fy + ftol);

    const double euc = dy.norm();
    if (euc > 1e-9) {
      out.check("pullback_smoothness", 0.0).upper((f.grad(yt) - vg.grad).norm() / euc, c.L_tilde);
    }
  }
  return out;
}

/// Finite-difference oracles for the pulled-back gradient and for the
/// gradient of the half squared distance.
inline SuiteResult derivative_suite(const GridCell& cell, std::size_t n, std::uint64_t seed,
                                    double h = 1e-5, double tol = 1e-6) {
  SuiteResult out{"derivatives", cell, {}};
  std::mt19937_64 rng(detail::cell_seed(seed, cell, 3));
  const auto cls = detail::class_of(cell.sign);
  const auto x0 = random_in_ball(AmbientPoint::pole(cell.d, cls), 1.0, rng);
  const MapFrame frame(x0, cell.R);
  const auto F = convex_test_objective(x0, cell.R, 3, rng);
  const MappedObjective f(F, frame);

  for (std::size_t s = 0; s < n; ++s) {
    const auto x = detail::sample_ball(x0, cell.R, rng);
    const Vector xt = to_ball(frame, x).coords;
    const Vector g = grad_mapped(f, {xt});
    Vector fd(cell.d);
    for (int i = 0; i < cell.d; ++i) {
      Vector e = Vector::Zero(cell.d);
      e(i) = h;
      fd(i) = (f.value(xt + e) - f.value(xt - e)) / (2.0 * h);
    }
    out.check("pullback_vs_fd", tol).upper((g - fd).norm() / std::max(g.norm(), 1e-300), tol);

    const auto& a = F->anchors().front();
    const auto v = random_tangent(x, 1.0, rng);
    const auto phi = [&](double t) {
      const double dd = distance(exp_map(v.scaled(t)), a);
      return 0.5 * dd * dd;
    };
    const auto ga = grad_half_sqdist(x, a);
    const double fdd = (phi(h) - phi(-h)) / (2.0 * h);
    // Directional derivative along a unit vector, relative to |grad|.
    if (ga.norm() > 0.0) {
      out.check("half_sqdist_vs_fd", tol).upper(std::abs(ga.inner(v) - fdd) / ga.norm(), tol);
    }
  }
  return out;
}

}  // namespace geoaccel
