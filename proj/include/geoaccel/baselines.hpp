#pragma once

// Riemannian gradient descent, used as the unaccelerated yardstick and as
// the high-precision optimum oracle.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "geoaccel/errors.hpp"
#include "geoaccel/manifold.hpp"
#include "geoaccel/objectives.hpp"

namespace geoaccel {

struct RgdParams {
  double step = 0.0;  // <= 0 means 1/L
  std::size_t max_iters = 100000;
  double tol_grad = 1e-10;
  /// Optional early stop once F(x_k) <= stop_value (used for gap targets).
  std::optional<double> stop_value;
};

struct RgdRecord {
  std::size_t k = 0;
  double value = 0.0;
  double grad_norm = 0.0;
  std::size_t grad_evals = 0;
  AmbientPoint x;
};

using RgdTrace = std::function<void(const RgdRecord&)>;

struct RgdResult {
  AmbientPoint x;
  double value = 0.0;
  double grad_norm = 0.0;
  std::size_t grad_evals = 0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Pulls y back onto the closed R-ball around x0 along the geodesic from x0.
inline AmbientPoint clip_to_ball(const AmbientPoint& x0, const AmbientPoint& y, double R) {
  const double d = distance(x0, y);
  if (d <= R) return y;
  return exp_map(log_map(x0, y).scaled(R / d));
}

inline RgdResult rgd_run(const ManifoldObjective& F, const AmbientPoint& x0, double R,
                         const RgdParams& params, const RgdTrace& trace = {}) {
  const double step = params.step > 0.0 ? params.step : 1.0 / F.smoothness();
  if (!(step > 0.0) || !std::isfinite(step)) throw GeometryError("RGD step must be positive");
  RgdResult out;
  AmbientPoint x = x0;
  for (std::size_t k = 0;; ++k) {
    const double v = F.value(x);
    const TangentVector g = F.riem_grad(x);
    ++out.grad_evals;
    const double gn = g.norm();
    if (trace) trace({k, v, gn, out.grad_evals, x});
    out.x = x;
    out.value = v;
    out.grad_norm = gn;
    out.iterations = k;
    if (gn <= params.tol_grad || (params.stop_value && v <= *params.stop_value)) {
      out.converged = true;
      return out;
    }
    if (k >= params.max_iters) return out;
    x = clip_to_ball(x0, exp_map(g.scaled(-step)), R);
  }
}

struct ReferenceOptimum {
  AmbientPoint x;
  double value = 0.0;
};

/// The analytic minimizer when the objective knows it, otherwise RGD run to
/// |grad F| <= 1e-12.
inline ReferenceOptimum reference_optimum(const ManifoldObjective& F, const AmbientPoint& x0,
                                          double R) {
  if (auto xs = F.known_minimizer()) {
    const double v = F.value(*xs);
    return {std::move(*xs), v};
  }
  RgdParams p;
  p.tol_grad = 1e-12;
  p.max_iters = 2000000;
  const auto res = rgd_run(F, x0, R, p);
  if (!res.converged) {
    throw std::runtime_error("reference optimum: RGD did not reach |grad| <= 1e-12 (last " +
                             std::to_string(res.grad_norm) + ")");
  }
  return {res.x, res.value};
}

}  // namespace geoaccel
