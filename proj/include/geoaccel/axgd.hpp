#pragma once

// Accelerated extra-gradient descent on the image ball of a geodesic map.
//
// The Euclidean pullback f = F o h^{-1} is not convex, but it satisfies a
// relaxed first-order bound with constants gamma_n, gamma_p. The method is an
// approximate implicit Euler discretization of accelerated mirror-descent
// dynamics with mirror map psi(x) = |x|^2 / 2, so grad psi* is the Euclidean
// projection onto the ball. Each iteration picks the coupling weight lambda
// with a bisection that certifies
//   f(x_{i+1}) - f(x_i) <= gamma_hat <grad f(x_{i+1}), x_{i+1} - x_i> + eps_hat_i.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>

#include "geoaccel/errors.hpp"
#include "geoaccel/geodesic_map.hpp"
#include "geoaccel/objectives.hpp"

namespace geoaccel {

struct SolverParams {
  double L_tilde = 1.0;
  double gamma_n = 1.0;
  double gamma_p = 1.0;
  double epsilon = 1e-3;
  std::size_t t = 1;
  double sigma = 1.0;
  double R_tilde = 1.0;

  double schedule_unit() const { return sigma * gamma_n * gamma_n * gamma_p / L_tilde; }
  /// a_i = i sigma gamma_n^2 gamma_p / (2 L~)
  double a(std::size_t i) const { return 0.5 * static_cast<double>(i) * schedule_unit(); }
  /// A_i = i (i + 1) sigma gamma_n^2 gamma_p / (4 L~)
  double A(std::size_t i) const {
    const double di = static_cast<double>(i);
    return 0.25 * di * (di + 1.0) * schedule_unit();
  }
  /// Per-iteration slack of the line search, eps_hat_i = A_t eps / (2 (t-1) A_i).
  double eps_hat(std::size_t i) const {
    if (t < 2 || i == 0) return std::numeric_limits<double>::infinity();
    return A(t) * epsilon / (2.0 * static_cast<double>(t - 1) * A(i));
  }

  /// Iteration count making the accelerated bound 2 L~ D~^2 / (gn^2 gp t(t+1)) <= eps/2,
  /// where D~ bounds |x~_0 - x~*|.
  static std::size_t iteration_budget(double L_tilde, double gamma_n, double gamma_p,
                                      double epsilon, double dist_bound) {
    const double v =
        std::sqrt(2.0 * L_tilde * dist_bound * dist_bound / (gamma_n * gamma_n * gamma_p * epsilon));
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(v)));
  }

  /// Parameters for an L-smooth objective on `frame` with target accuracy
  /// epsilon. `dist_bound` defaults to the ball diameter 2 R~.
  static SolverParams derive(const MapFrame& frame, double L, double epsilon,
                             std::optional<double> dist_bound = std::nullopt) {
    if (!(epsilon > 0.0)) throw GeometryError("epsilon must be positive");
    const auto c = deformation_constants(frame, L);
    SolverParams p;
    p.L_tilde = c.L_tilde;
    p.gamma_n = c.gamma_n;
    p.gamma_p = c.gamma_p;
    p.epsilon = epsilon;
    p.R_tilde = frame.R_tilde();
    p.t = iteration_budget(p.L_tilde, p.gamma_n, p.gamma_p, epsilon,
                           dist_bound.value_or(2.0 * frame.R_tilde()));
    return p;
  }
};

struct SolverState {
  std::size_t i = 0;
  Vector x_t;  // primal iterate, always inside the ball
  Vector z_t;  // unconstrained dual point
  double A = 0.0;
  std::size_t grad_evals = 0;
  double f_x = std::numeric_limits<double>::quiet_NaN();  // f(x_t) when known

  static SolverState initial(const Vector& x0_tilde) {
    SolverState s;
    s.x_t = x0_tilde;
    s.z_t = x0_tilde;  // grad psi(x0)
    return s;
  }
};

/// One discretization step for a fixed lambda, with the quantities the line
/// search needs.
struct StepResult {
  SolverState next;
  Vector chi;
  double f_next = 0.0;
  Vector grad_next;
};

struct LineSearchResult {
  double lambda = 1.0;
  double gamma_hat = 1.0;
  double residual = 0.0;
  std::size_t probes = 0;
  StepResult step;
};

/// grad psi*(z) for psi = |.|^2/2 restricted to the ball: Euclidean projection.
inline Vector mirror_dual_grad(const Vector& z, double R_tilde) {
  const double n = z.norm();
  if (n <= R_tilde) return z;
  return z * (R_tilde / n);
}

inline StepResult axgd_step(const SolverState& state, const SolverParams& params,
                            const MappedObjective& f, double lambda) {
  const double step = params.a(state.i + 1) / params.gamma_n;
  StepResult out;
  out.chi = (1.0 - lambda) * state.x_t + lambda * mirror_dual_grad(state.z_t, params.R_tilde);
  const Vector zeta = state.z_t - step * f.grad(out.chi);
  Vector x_next = (1.0 - lambda) * state.x_t + lambda * mirror_dual_grad(zeta, params.R_tilde);
  auto vg = f.value_grad(x_next);
  out.f_next = vg.value;
  out.grad_next = std::move(vg.grad);
  out.next.i = state.i + 1;
  out.next.z_t = state.z_t - step * out.grad_next;
  out.next.x_t = std::move(x_next);
  out.next.A = state.A + params.a(state.i + 1);
  out.next.grad_evals = state.grad_evals + 2;
  out.next.f_x = out.f_next;
  return out;
}

/// 4 log2(L~ R~ i / (gamma_n eps_hat_i)) + 4, the probe budget the acceptance
/// suite holds every iteration to.
inline double analytic_probe_bound(const SolverParams& params, std::size_t i, double eps_hat) {
  const double arg = params.L_tilde * params.R_tilde * static_cast<double>(i) /
                     (params.gamma_n * eps_hat);
  return 4.0 * std::log2(std::max(1.0, arg)) + 4.0;
}

/// Hard failsafe on the number of probes: four times the analytic bound.
inline std::size_t probe_cap(const SolverParams& params, std::size_t i, double eps_hat) {
  return static_cast<std::size_t>(std::ceil(4.0 * analytic_probe_bound(params, i, eps_hat)));
}

inline LineSearchResult binary_line_search(const SolverState& state, const SolverParams& params,
                                           const MappedObjective& f, double eps_hat_i) {
  if (state.i < 1 || !(state.A > 0.0)) {
    throw GeometryError("line search needs i >= 1 (the first step uses lambda = 1)");
  }
  if (!(eps_hat_i > 0.0)) throw GeometryError("line search slack must be positive");
  const double f_x = std::isnan(state.f_x) ? f.value(state.x_t) : state.f_x;
  const double w = params.a(state.i + 1) / params.gamma_n;
  const double A = state.A;
  const auto lambda_of = [&](double g) { return w / (A * g + w); };
  const auto gamma_of = [&](double l) { return w * (1.0 / l - 1.0) / A; };
  const std::size_t cap = probe_cap(params, state.i, eps_hat_i);

  LineSearchResult r;
  double inner = 0.0;
  const auto probe = [&](double lambda, double gamma_hat) {
    r.step = axgd_step(state, params, f, lambda);
    r.lambda = lambda;
    r.gamma_hat = gamma_hat;
    ++r.probes;
    inner = r.step.grad_next.dot(r.step.next.x_t - state.x_t);
    r.residual = -gamma_hat * inner + (r.step.f_next - f_x);
    return r.residual <= eps_hat_i;
  };

  const double g_hi = 1.0 / params.gamma_n;
  const double g_lo = params.gamma_p;
  double lo = lambda_of(g_hi);
  double hi = lambda_of(g_lo);
  if (probe(lo, g_hi)) return r;
  const bool lo_negative = inner < 0.0;
  if (probe(hi, g_lo)) return r;
  // Bisection keeps endpoints whose inner products have opposite signs, so a
  // zero of the inner product (where the inequality holds with no slack)
  // stays bracketed.
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (r.probes >= cap) {
      std::ostringstream msg;
      msg << "line search exceeded " << cap << " probes at iteration " << state.i
          << " with bracket [" << lo << ", " << hi << "] and residual " << r.residual
          << " > eps_hat " << eps_hat_i
          << "; the declared smoothness or deformation constants do not hold";
      throw LineSearchError(msg.str(), state.i, lo, hi, r.residual, eps_hat_i);
    }
    if (probe(mid, gamma_of(mid))) return r;
    if ((inner < 0.0) == lo_negative) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
}

struct IterationRecord {
  std::size_t i = 0;  // index of the iterate just produced (1..t)
  double f_value = 0.0;
  double grad_norm = 0.0;
  std::size_t grad_evals = 0;
  double lambda = 1.0;
  double gamma_hat = std::numeric_limits<double>::quiet_NaN();
  std::size_t probes = 1;
  double eps_hat = std::numeric_limits<double>::infinity();
  double residual = 0.0;
  Vector x;
};

using TraceSink = std::function<void(const IterationRecord&)>;

struct SolverResult {
  MappedPoint x;
  std::size_t grad_evals = 0;
  std::size_t iterations = 0;
  double grad_norm = 0.0;  // |grad f(x~_t)|, already computed by the last step
};

/// Runs params.t iterations from x0_tilde and returns x~_t.
inline SolverResult run(const MappedObjective& f, const SolverParams& params,
                        const MappedPoint& x0_tilde, const TraceSink& trace = {}) {
  if (!(x0_tilde.coords.norm() <= params.R_tilde * (1.0 + kDomainTol) + kDomainTol)) {
    throw GeometryError("starting point lies outside the image ball");
  }
  SolverState state = SolverState::initial(x0_tilde.coords);
  double last_grad_norm = 0.0;
  for (std::size_t i = 0; i < params.t; ++i) {
    IterationRecord rec;
    StepResult step;
    if (i == 0) {
      step = axgd_step(state, params, f, 1.0);
    } else {
      LineSearchResult ls;
      try {
        ls = binary_line_search(state, params, f, params.eps_hat(i));
      } catch (const LineSearchError& e) {
        std::ostringstream msg;
        msg << "iteration " << i << " of " << params.t << ": " << e.what();
        throw LineSearchError(msg.str(), e.iteration, e.bracket_lo, e.bracket_hi, e.residual,
                              e.eps_hat);
      }
      rec.lambda = ls.lambda;
      rec.gamma_hat = ls.gamma_hat;
      rec.probes = ls.probes;
      rec.eps_hat = params.eps_hat(i);
      rec.residual = ls.residual;
      step = std::move(ls.step);
      // Each probe cost two gradients; the accepted one is already counted.
      step.next.grad_evals = state.grad_evals + 2 * ls.probes;
    }
    state = std::move(step.next);
    last_grad_norm = step.grad_next.norm();
    if (trace) {
      rec.i = state.i;
      rec.f_value = step.f_next;
      rec.grad_norm = last_grad_norm;
      rec.grad_evals = state.grad_evals;
      rec.x = state.x_t;
      trace(rec);
    }
  }
  return {MappedPoint{state.x_t}, state.grad_evals, state.i, last_grad_norm};
}

}  // namespace geoaccel
