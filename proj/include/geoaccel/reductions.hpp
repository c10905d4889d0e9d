#pragma once

// Reductions between the strongly g-convex and the plain g-convex regimes.
//
// solve_strongly_gconvex restarts the accelerated solver: each round asks
// for gap <= mu d^2 / 4 which, by strong convexity, halves the squared
// distance to the minimizer. solve_gconvex_via_sc goes the other way and
// minimizes F + (mu_i/2) d(., x0)^2 for a geometrically decreasing mu_i.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

#include "geoaccel/axgd.hpp"
#include "geoaccel/errors.hpp"
#include "geoaccel/geodesic_map.hpp"
#include "geoaccel/manifold.hpp"
#include "geoaccel/objectives.hpp"

namespace geoaccel {

/// Trace sink for multi-stage runs. Records carry cumulative grad_evals over
/// the whole reduction; x is in the coordinates of `frame`.
using StageTrace = std::function<void(const MapFrame& frame, const IterationRecord&)>;

struct RestartPlan {
  std::size_t rounds = 1;
  double mu = 0.0;
  double R = 0.0;
  double epsilon = 0.0;
  bool recenter = true;

  static RestartPlan make(double mu, double R, double epsilon, bool recenter) {
    if (!(mu > 0.0)) throw GeometryError("restart scheme needs a strongly g-convex objective (mu > 0)");
    if (!(R > 0.0) || !(epsilon > 0.0)) throw GeometryError("R and epsilon must be positive");
    RestartPlan p;
    p.mu = mu;
    p.R = R;
    p.epsilon = epsilon;
    p.recenter = recenter;
    const double v = std::ceil(std::log2(mu * R * R / epsilon) - 1.0);
    p.rounds = v < 1.0 ? 1 : static_cast<std::size_t>(v);
    return p;
  }

  /// Bound on d(x, x*) at the start of round k (0-based): R / 2^{k/2}.
  double radius(std::size_t k) const { return R * std::pow(2.0, -0.5 * static_cast<double>(k)); }
  /// Gap requested from round k: mu radius(k)^2 / 4.
  double target(std::size_t k) const {
    const double r = radius(k);
    return 0.25 * mu * r * r;
  }
};

struct RoundRecord {
  std::size_t round = 0;
  double radius = 0.0;
  double target = 0.0;
  std::size_t t = 0;
  std::size_t grad_evals = 0;  // this round only
  AmbientPoint start;
  AmbientPoint output;
};

struct RestartResult {
  AmbientPoint x;
  std::size_t grad_evals = 0;
  std::vector<RoundRecord> rounds;
};

inline RestartResult solve_strongly_gconvex(const ObjectivePtr& F, const AmbientPoint& x0, double R,
                                            double epsilon, bool recenter = true,
                                            const StageTrace& trace = {},
                                            std::size_t evals_offset = 0) {
  const auto plan = RestartPlan::make(F->strong_convexity(), R, epsilon, recenter);
  const double L = F->smoothness();
  const MapFrame fixed(x0, R);
  const auto fixed_consts = deformation_constants(fixed, L);

  RestartResult out;
  out.x = x0;
  for (std::size_t k = 0; k < plan.rounds; ++k) {
    const double rk = plan.radius(k);
    const MapFrame frame = recenter ? MapFrame(out.x, rk) : fixed;
    // Distance bound in the ball between the round's start and x*.
    const double dist_bound = recenter
                                  ? frame.R_tilde()
                                  : std::min(2.0 * frame.R_tilde(), rk / fixed_consts.dist_lo);
    const auto params = SolverParams::derive(frame, L, plan.target(k), dist_bound);
    const MappedObjective f(F, frame);

    TraceSink sink;
    const std::size_t base = evals_offset + out.grad_evals;
    if (trace) {
      sink = [&](const IterationRecord& rec) {
        IterationRecord shifted = rec;
        shifted.grad_evals += base;
        trace(frame, shifted);
      };
    }
    const auto res = run(f, params, to_ball(frame, out.x), sink);

    RoundRecord rr;
    rr.round = k;
    rr.radius = rk;
    rr.target = plan.target(k);
    rr.t = params.t;
    rr.grad_evals = res.grad_evals;
    rr.start = out.x;
    rr.output = frame.lift(res.x.coords);
    out.rounds.push_back(rr);
    out.grad_evals += res.grad_evals;
    out.x = rr.output;
    // A stationary output is the minimizer; later rounds would not move.
    if (res.grad_norm == 0.0) break;
  }
  return out;
}

struct RegularizationPlan {
  double Delta = 0.0;
  double R = 0.0;
  double epsilon = 0.0;
  double mu0 = 0.0;
  std::size_t T = 2;
  DeltaConstants delta;

  static RegularizationPlan make(double Delta, double R, double epsilon, int K) {
    if (!(Delta > 0.0) || !(R > 0.0) || !(epsilon > 0.0)) {
      throw GeometryError("Delta, R and epsilon must be positive");
    }
    RegularizationPlan p;
    p.Delta = Delta;
    p.R = R;
    p.epsilon = epsilon;
    p.mu0 = Delta / (R * R);
    const double v = std::ceil(std::log2(Delta / epsilon) / 2.0) + 1.0;
    p.T = v < 2.0 ? 2 : static_cast<std::size_t>(v);
    p.delta = delta_constants(K, K, 2.0 * R);
    return p;
  }

  double mu(std::size_t i) const { return std::ldexp(mu0, -static_cast<int>(i)); }

  /// Bound on the initial gap of stage i: B_0 = Delta,
  /// B_i = B_{i-1}/4 + mu_i R^2 / 2.
  double initial_gap(std::size_t i) const {
    double B = Delta;
    for (std::size_t j = 1; j <= i; ++j) B = 0.25 * B + 0.5 * mu(j) * R * R;
    return B;
  }

  /// Accuracy requested from stage i. Intermediate stages only need to cut
  /// their initial gap by four; the last one also has to land within eps/4.
  double stage_epsilon(std::size_t i) const {
    const double quarter = 0.25 * initial_gap(i);
    return i + 1 == T ? std::min(quarter, 0.25 * epsilon) : quarter;
  }
};

struct StageRecord {
  std::size_t stage = 0;
  double mu = 0.0;
  double stage_epsilon = 0.0;
  double radius = 0.0;
  std::size_t grad_evals = 0;
  std::size_t rounds = 0;
  AmbientPoint output;
};

struct RegularizationResult {
  AmbientPoint x;
  std::size_t grad_evals = 0;
  RegularizationPlan plan;
  std::vector<StageRecord> stages;
};

/// Default Delta: 2 L R^2, valid for any L-smooth F whose minimizer lies in
/// the R-ball around x0.
inline double default_delta(const ManifoldObjective& F, double R) {
  return 2.0 * F.smoothness() * R * R;
}

inline RegularizationResult solve_gconvex_via_sc(const ObjectivePtr& F, const AmbientPoint& x0,
                                                 double R, std::optional<double> Delta,
                                                 double epsilon, bool recenter = true,
                                                 const StageTrace& trace = {}) {
  RegularizationResult out;
  out.plan = RegularizationPlan::make(Delta.value_or(default_delta(*F, R)), R, epsilon,
                                      x0.curvature().k());
  const auto& plan = out.plan;
  out.x = x0;
  for (std::size_t i = 0; i < plan.T; ++i) {
    const auto Fi = regularized(F, plan.mu(i), x0, plan.delta);
    const double sc = Fi->strong_convexity();
    // Every stage minimizer is within R of x0, and the warm start is within
    // sqrt(2 B_i / mu) of it by strong convexity.
    double radius = std::min(distance(out.x, x0) + R, std::sqrt(2.0 * plan.initial_gap(i) / sc));
    if (x0.sign() == Sign::Spherical && radius >= std::numbers::pi / 2) {
      throw GeometryError("stage radius reaches the hemisphere boundary; reduce R");
    }
    if (radius <= 0.0) radius = R;
    const auto res = solve_strongly_gconvex(Fi, out.x, radius, plan.stage_epsilon(i), recenter,
                                            trace, out.grad_evals);
    StageRecord sr;
    sr.stage = i;
    sr.mu = plan.mu(i);
    sr.stage_epsilon = plan.stage_epsilon(i);
    sr.radius = radius;
    sr.grad_evals = res.grad_evals;
    sr.rounds = res.rounds.size();
    sr.output = res.x;
    out.stages.push_back(sr);
    out.grad_evals += res.grad_evals;
    out.x = res.x;
  }
  return out;
}

}  // namespace geoaccel
