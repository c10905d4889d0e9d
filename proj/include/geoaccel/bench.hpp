#pragma once

// Experiment harness behind the `bench` tool: config parsing, running one
// configured solver against a reference optimum, CSV traces, rate fits.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "geoaccel/axgd.hpp"
#include "geoaccel/baselines.hpp"
#include "geoaccel/errors.hpp"
#include "geoaccel/io.hpp"
#include "geoaccel/objectives.hpp"
#include "geoaccel/reductions.hpp"

namespace geoaccel {

enum class SolverKind { Axgd, Rgd, RestartSc, ReduceGc };

inline std::string to_string(SolverKind s) {
  switch (s) {
    case SolverKind::Axgd: return "axgd";
    case SolverKind::Rgd: return "rgd";
    case SolverKind::RestartSc: return "restart_sc";
    case SolverKind::ReduceGc: return "reduce_gc";
  }
  return "?";
}

struct ExperimentConfig {
  Sign manifold = Sign::Hyperbolic;
  int d = 2;
  std::optional<double> curvature;  // defaults to +1 / -1
  double R = 1.0;
  std::string anchors;              // anchor file; empty means generate
  std::size_t anchor_count = 5;
  WeightScheme weights = WeightScheme::Uniform;
  SolverKind solver = SolverKind::Axgd;
  double epsilon = 1e-4;
  std::uint64_t seed = 1;
  std::string output;
  std::optional<double> condition;  // declared L / mu, loosens L only
  bool recenter = true;
  std::optional<double> delta;      // reduce_gc initial gap bound
  std::size_t rgd_max_iters = 1000000;
  std::size_t trace_stride = 1;
  bool record_wall_time = false;

  double K() const { return curvature.value_or(manifold == Sign::Spherical ? 1.0 : -1.0); }
};

namespace detail {

inline double parse_real(const std::string& key, const std::string& v, std::size_t line) {
  double out = 0.0;
  const auto* b = v.data();
  const auto* e = v.data() + v.size();
  const auto r = std::from_chars(b, e, out);
  if (r.ec != std::errc() || r.ptr != e || !std::isfinite(out)) {
    throw ConfigError("field '" + key + "': not a finite number: '" + v + "'", line, key);
  }
  return out;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v, std::size_t line) {
  std::uint64_t out = 0;
  const auto* e = v.data() + v.size();
  const auto r = std::from_chars(v.data(), e, out);
  if (r.ec != std::errc() || r.ptr != e) {
    throw ConfigError("field '" + key + "': not a non-negative integer: '" + v + "'", line, key);
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v, std::size_t line) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("field '" + key + "': expected true/false, got '" + v + "'", line, key);
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Sets one field from its textual value. `line` is 0 for command-line
/// overrides.
inline void set_config_field(ExperimentConfig& cfg, const std::string& key,
                             const std::string& value, std::size_t line = 0) {
  using namespace detail;
  if (key == "manifold") {
    if (value == "hyperbolic") {
      cfg.manifold = Sign::Hyperbolic;
    } else if (value == "spherical") {
      cfg.manifold = Sign::Spherical;
    } else {
      throw ConfigError("field 'manifold': expected hyperbolic or spherical, got '" + value + "'",
                        line, key);
    }
  } else if (key == "d") {
    const auto v = parse_uint(key, value, line);
    if (v < 1 || v > 10000) throw ConfigError("field 'd': must be in [1, 10000]", line, key);
    cfg.d = static_cast<int>(v);
  } else if (key == "curvature") {
    cfg.curvature = parse_real(key, value, line);
  } else if (key == "R") {
    cfg.R = parse_real(key, value, line);
  } else if (key == "anchors") {
    cfg.anchors = value;
  } else if (key == "anchor_count") {
    cfg.anchor_count = parse_uint(key, value, line);
  } else if (key == "weights") {
    if (value == "uniform") {
      cfg.weights = WeightScheme::Uniform;
    } else if (value == "random") {
      cfg.weights = WeightScheme::Random;
    } else {
      throw ConfigError("field 'weights': expected uniform or random, got '" + value + "'", line,
                        key);
    }
  } else if (key == "solver") {
    if (value == "axgd") {
      cfg.solver = SolverKind::Axgd;
    } else if (value == "rgd") {
      cfg.solver = SolverKind::Rgd;
    } else if (value == "restart_sc") {
      cfg.solver = SolverKind::RestartSc;
    } else if (value == "reduce_gc") {
      cfg.solver = SolverKind::ReduceGc;
    } else {
      throw ConfigError(
          "field 'solver': expected axgd, rgd, restart_sc or reduce_gc, got '" + value + "'", line,
          key);
    }
  } else if (key == "epsilon") {
    cfg.epsilon = parse_real(key, value, line);
  } else if (key == "seed") {
    cfg.seed = parse_uint(key, value, line);
  } else if (key == "output") {
    cfg.output = value;
  } else if (key == "condition") {
    cfg.condition = parse_real(key, value, line);
  } else if (key == "recenter") {
    cfg.recenter = parse_bool(key, value, line);
  } else if (key == "delta") {
    cfg.delta = parse_real(key, value, line);
  } else if (key == "rgd_max_iters") {
    cfg.rgd_max_iters = parse_uint(key, value, line);
  } else if (key == "trace_stride") {
    cfg.trace_stride = parse_uint(key, value, line);
  } else if (key == "record_wall_time") {
    cfg.record_wall_time = parse_bool(key, value, line);
  } else {
    throw ConfigError("unknown field '" + key + "'", line, key);
  }
}

/// Flat `key = value` lines, '#' starts a comment.
inline ExperimentConfig parse_config(std::istream& in, ExperimentConfig cfg = {}) {
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = detail::trim(raw.substr(0, hash));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line) + ": expected key=value", line, "");
    }
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string value = detail::trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line) + ": empty key", line, "");
    try {
      set_config_field(cfg, key, value, line);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line) + ": " + e.what(), line, e.field);
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'", 0, "config");
  return parse_config(in);
}

inline void validate(const ExperimentConfig& cfg) {
  const double K = cfg.K();
  if ((K > 0) != (cfg.manifold == Sign::Spherical)) {
    throw ConfigError("curvature sign disagrees with manifold '" + to_string(cfg.manifold) + "'", 0,
                      "curvature");
  }
  try {
    rescale_to_unit(K, cfg.R, 1.0, 0.0);
  } catch (const GeometryError& e) {
    throw ConfigError(e.what(), 0, "R");
  }
  // The Frechet constants need the ball's diameter inside an open quarter circle.
  if (cfg.manifold == Sign::Spherical && 2.0 * std::sqrt(K) * cfg.R >= std::numbers::pi / 2) {
    throw ConfigError("spherical instances need sqrt(K) * R < pi/4", 0, "R");
  }
  if (!(cfg.epsilon > 0.0)) throw ConfigError("epsilon must be positive", 0, "epsilon");
  if (cfg.anchors.empty() && cfg.anchor_count == 0) {
    throw ConfigError("anchor_count must be positive", 0, "anchor_count");
  }
  if (cfg.condition && !(*cfg.condition >= 1.0)) {
    throw ConfigError("condition must be >= 1", 0, "condition");
  }
  if (cfg.delta && !(*cfg.delta > 0.0)) throw ConfigError("delta must be positive", 0, "delta");
  if (cfg.trace_stride == 0) throw ConfigError("trace_stride must be >= 1", 0, "trace_stride");
}

struct ReportRow {
  std::size_t iter = 0;
  std::size_t grad_evals = 0;
  double f_gap = 0.0;
  double dist_to_opt = 0.0;
  std::optional<double> lambda;
  std::optional<double> gamma_hat;
  std::int64_t wall_ns = 0;
};

struct RunSummary {
  SolverKind solver = SolverKind::Axgd;
  double epsilon = 0.0;
  std::size_t total_grad_evals = 0;
  std::size_t iterations = 0;
  double final_gap = 0.0;
  double final_dist = 0.0;
  double f_star = 0.0;
  double L = 0.0;
  double mu = 0.0;
  std::size_t rounds = 0;  // restart rounds or regularization stages
};

struct RunReport {
  std::vector<ReportRow> rows;
  RunSummary summary;
};

/// 17 significant digits, independent of the global locale.
inline std::string format_real(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

inline constexpr const char* kCsvHeader = "iter,grad_evals,f_gap,dist_to_opt,lambda,gamma_hat,wall_ns";

inline void write_csv(std::ostream& out, const RunReport& report) {
  out << kCsvHeader << '\n';
  for (const auto& r : report.rows) {
    out << r.iter << ',' << r.grad_evals << ',' << format_real(r.f_gap) << ','
        << format_real(r.dist_to_opt) << ',' << (r.lambda ? format_real(*r.lambda) : "") << ','
        << (r.gamma_hat ? format_real(*r.gamma_hat) : "") << ',' << r.wall_ns << '\n';
  }
}

inline void write_csv_file(const std::string& path, const RunReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_csv(out, report);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

/// The unit-curvature problem a config describes.
struct Instance {
  RescaledProblem unit;
  double K = -1.0;
  AmbientPoint x0;
  std::shared_ptr<FrechetObjective> frechet;
  ObjectivePtr F;  // frechet with the declared constants the solver sees
};

inline Instance build_instance(const ExperimentConfig& cfg) {
  validate(cfg);
  Instance inst;
  inst.K = cfg.K();
  const CurvatureClass cls =
      cfg.manifold == Sign::Spherical ? CurvatureClass::spherical() : CurvatureClass::hyperbolic();
  // L, mu are placeholders here; only the radius is rescaled.
  inst.unit = rescale_to_unit(inst.K, cfg.R, 1.0, 0.0);
  const double R = inst.unit.unit_R;
  std::vector<AmbientPoint> anchors;
  if (!cfg.anchors.empty()) {
    auto set = read_anchor_file(cfg.anchors);
    if (set.cls.sign != cls.sign || set.d != cfg.d) {
      throw ConfigError("anchor file '" + cfg.anchors + "' declares " + to_string(set.cls.sign) +
                            " d=" + std::to_string(set.d) + ", config wants " +
                            to_string(cls.sign) + " d=" + std::to_string(cfg.d),
                        0, "anchors");
    }
    anchors = std::move(set.anchors);
  } else {
    anchors = random_anchors(cls, cfg.d, R, cfg.anchor_count, cfg.seed);
  }
  inst.x0 = AmbientPoint::pole(cfg.d, cls);
  for (const auto& a : anchors) {
    if (distance(inst.x0, a) > R + kDomainTol) {
      throw ConfigError("anchor outside the R-ball around the start point", 0, "anchors");
    }
  }
  auto w = make_weights(cfg.weights, anchors.size(), cfg.seed);
  inst.frechet = FrechetObjective::on_ball(std::move(anchors), std::move(w), R);
  if (cfg.condition) {
    const double mu = inst.frechet->strong_convexity();
    inst.F = with_constants(inst.frechet, std::max(*cfg.condition * mu, inst.frechet->smoothness()),
                            mu);
  } else {
    inst.F = inst.frechet;
  }
  return inst;
}

inline RunReport run_experiment(const ExperimentConfig& cfg) {
  const Instance inst = build_instance(cfg);
  const double absK = std::abs(inst.K);
  const double sK = std::sqrt(absK);
  const double R = inst.unit.unit_R;
  const double eps = absK * cfg.epsilon;
  const auto& F = *inst.frechet;
  const auto ref = reference_optimum(F, inst.x0, R);

  RunReport report;
  auto& sum = report.summary;
  sum.solver = cfg.solver;
  sum.epsilon = cfg.epsilon;
  sum.f_star = ref.value / absK;
  sum.L = inst.F->smoothness() * absK;
  sum.mu = inst.F->strong_convexity() * absK;

  const auto t0 = std::chrono::steady_clock::now();
  std::size_t counter = 0;
  const auto push = [&](std::size_t iter, std::size_t evals, const AmbientPoint& x,
                        std::optional<double> lambda, std::optional<double> gamma_hat,
                        bool force) {
    ++counter;
    if (!force && (counter - 1) % cfg.trace_stride != 0) return;
    ReportRow row;
    row.iter = iter;
    row.grad_evals = evals;
    row.f_gap = std::max(0.0, F.value(x) - ref.value) / absK;
    row.dist_to_opt = distance(x, ref.x) / sK;
    row.lambda = lambda;
    row.gamma_hat = gamma_hat;
    if (cfg.record_wall_time) {
      row.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    }
    report.rows.push_back(row);
  };
  const auto opt = [](double v) -> std::optional<double> {
    if (std::isnan(v)) return std::nullopt;
    return v;
  };

  AmbientPoint final_x = inst.x0;
  push(0, 0, inst.x0, std::nullopt, std::nullopt, true);
  switch (cfg.solver) {
    case SolverKind::Axgd: {
      const MapFrame frame(inst.x0, R);
      const MappedObjective f(inst.F, frame);
      const auto params = SolverParams::derive(frame, inst.F->smoothness(), eps);
      const auto res = run(f, params, MappedPoint{Vector::Zero(cfg.d)}, [&](const IterationRecord& r) {
        push(r.i, r.grad_evals, frame.lift(r.x), r.lambda, opt(r.gamma_hat), r.i == params.t);
      });
      final_x = frame.lift(res.x.coords);
      sum.total_grad_evals = res.grad_evals;
      sum.iterations = res.iterations;
      break;
    }
    case SolverKind::Rgd: {
      RgdParams p;
      p.max_iters = cfg.rgd_max_iters;
      p.tol_grad = 0.0;
      p.stop_value = ref.value + eps;
      std::optional<RgdRecord> last;
      const auto res = rgd_run(*inst.F, inst.x0, R, p, [&](const RgdRecord& r) {
        if (r.k == 0) return;
        push(r.k, r.grad_evals, r.x, std::nullopt, std::nullopt, false);
        last = r;
      });
      if (last && (counter - 1) % cfg.trace_stride != 0) {
        push(last->k, last->grad_evals, last->x, std::nullopt, std::nullopt, true);
      }
      final_x = res.x;
      sum.total_grad_evals = res.grad_evals;
      sum.iterations = res.iterations;
      break;
    }
    case SolverKind::RestartSc:
    case SolverKind::ReduceGc: {
      std::size_t iter = 0;
      std::optional<std::pair<std::size_t, AmbientPoint>> last;
      const StageTrace trace = [&](const MapFrame& frame, const IterationRecord& r) {
        ++iter;
        const AmbientPoint x = frame.lift(r.x);
        push(iter, r.grad_evals, x, r.lambda, opt(r.gamma_hat), false);
        last.emplace(r.grad_evals, x);
      };
      if (cfg.solver == SolverKind::RestartSc) {
        const auto res = solve_strongly_gconvex(inst.F, inst.x0, R, eps, cfg.recenter, trace);
        final_x = res.x;
        sum.total_grad_evals = res.grad_evals;
        sum.rounds = res.rounds.size();
      } else {
        const auto G = with_constants(inst.F, inst.F->smoothness(), 0.0);
        std::optional<double> delta;
        if (cfg.delta) delta = *cfg.delta * absK;
        const auto res = solve_gconvex_via_sc(G, inst.x0, R, delta, eps, cfg.recenter, trace);
        final_x = res.x;
        sum.total_grad_evals = res.grad_evals;
        sum.rounds = res.stages.size();
      }
      sum.iterations = iter;
      if (last && (counter - 1) % cfg.trace_stride != 0) {
        push(iter, last->first, last->second, std::nullopt, std::nullopt, true);
      }
      break;
    }
  }
  sum.final_gap = std::max(0.0, F.value(final_x) - ref.value) / absK;
  sum.final_dist = distance(final_x, ref.x) / sK;
  if (!cfg.output.empty()) write_csv_file(cfg.output, report);
  return report;
}

/// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_slope: need >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_slope: x values are all equal");
  return sxy / sxx;
}

struct RatePoint {
  double epsilon;
  double grad_evals;
};

/// Slope of log(evals) against log(1/eps). With `deflate_log`, evals are
/// divided by log(1/eps) first to strip the polylog factor.
inline double fit_rate_exponent(const std::vector<RatePoint>& series, bool deflate_log = false) {
  if (series.size() < 4) throw std::invalid_argument("rate fit needs at least 4 points");
  double lo = series.front().epsilon;
  double hi = lo;
  for (const auto& p : series) {
    if (!(p.epsilon > 0.0) || !(p.grad_evals > 0.0)) {
      throw std::invalid_argument("rate fit needs positive epsilon and evaluation counts");
    }
    if (deflate_log && !(p.epsilon < 1.0)) {
      throw std::invalid_argument("log deflation needs epsilon < 1");
    }
    lo = std::min(lo, p.epsilon);
    hi = std::max(hi, p.epsilon);
  }
  if (std::log10(hi / lo) < 2.0 - 1e-12) {
    throw std::invalid_argument("rate fit needs epsilon to span at least 2 decades");
  }
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& p : series) {
    const double inv = std::log(1.0 / p.epsilon);
    x.push_back(inv);
    y.push_back(std::log(deflate_log ? p.grad_evals / inv : p.grad_evals));
  }
  return fit_slope(x, y);
}

}  // namespace geoaccel
