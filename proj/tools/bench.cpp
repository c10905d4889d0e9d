// bench: run, sweep and verify experiments for the geodesic-map solvers.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "geoaccel/bench.hpp"
#include "geoaccel/verify.hpp"

namespace fs = std::filesystem;
using namespace geoaccel;

namespace {

struct Overrides {
  std::string solver;
  std::string epsilon;
  std::string seed;
  std::string output;
  std::vector<std::string> sets;
  bool wall_time = false;
};

void add_overrides(CLI::App* app, Overrides& o, bool with_output) {
  app->add_option("--solver", o.solver, "axgd | rgd | restart_sc | reduce_gc");
  app->add_option("--seed", o.seed, "instance seed");
  if (with_output) {
    app->add_option("--epsilon", o.epsilon, "target accuracy");
    app->add_option("--output", o.output, "CSV trace path");
  }
  app->add_option("--set", o.sets, "extra key=value overrides (repeatable)");
  app->add_flag("--record-wall-time", o.wall_time, "fill the wall_ns column (breaks byte-identical output)");
}

ExperimentConfig configure(const std::string& path, const Overrides& o) {
  ExperimentConfig cfg = path.empty() ? ExperimentConfig{} : load_config(path);
  if (!o.solver.empty()) set_config_field(cfg, "solver", o.solver);
  if (!o.epsilon.empty()) set_config_field(cfg, "epsilon", o.epsilon);
  if (!o.seed.empty()) set_config_field(cfg, "seed", o.seed);
  if (!o.output.empty()) set_config_field(cfg, "output", o.output);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'", 0, kv);
    set_config_field(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.wall_time) cfg.record_wall_time = true;
  validate(cfg);
  return cfg;
}

void print_summary(std::ostream& out, const RunSummary& s) {
  out << "solver=" << to_string(s.solver) << '\n'
      << "epsilon=" << format_real(s.epsilon) << '\n'
      << "grad_evals=" << s.total_grad_evals << '\n'
      << "iterations=" << s.iterations << '\n'
      << "final_gap=" << format_real(s.final_gap) << '\n'
      << "final_dist=" << format_real(s.final_dist) << '\n'
      << "f_star=" << format_real(s.f_star) << '\n'
      << "L=" << format_real(s.L) << '\n'
      << "mu=" << format_real(s.mu) << '\n';
  if (s.rounds) out << "rounds=" << s.rounds << '\n';
}

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    ExperimentConfig scratch;
    set_config_field(scratch, "epsilon", item);
    out.push_back(scratch.epsilon);
  }
  if (out.empty()) throw ConfigError("--epsilons is empty", 0, "epsilons");
  return out;
}

int cmd_run(const std::string& config, const Overrides& o) {
  const auto cfg = configure(config, o);
  const auto report = run_experiment(cfg);
  if (cfg.output.empty()) write_csv(std::cout, report);
  print_summary(cfg.output.empty() ? std::cerr : std::cout, report.summary);
  return 0;
}

int cmd_sweep(const std::string& config, const Overrides& o, const std::string& epsilons,
              const std::string& dir) {
  auto base = configure(config, o);
  const auto eps = parse_list(epsilons);
  fs::create_directories(dir);
  std::vector<RatePoint> series;
  std::ofstream summary(fs::path(dir) / "summary.csv", std::ios::binary);
  if (!summary) throw std::runtime_error("cannot write summary.csv in '" + dir + "'");
  summary << "epsilon,grad_evals,final_gap,final_dist,csv\n";
  for (std::size_t i = 0; i < eps.size(); ++i) {
    auto cfg = base;
    cfg.epsilon = eps[i];
    const std::string name = to_string(cfg.solver) + "_" + std::to_string(i) + ".csv";
    cfg.output = (fs::path(dir) / name).string();
    const auto r = run_experiment(cfg);
    summary << format_real(eps[i]) << ',' << r.summary.total_grad_evals << ','
            << format_real(r.summary.final_gap) << ',' << format_real(r.summary.final_dist) << ','
            << name << '\n';
    std::cout << "epsilon=" << format_real(eps[i]) << " grad_evals=" << r.summary.total_grad_evals
              << " final_gap=" << format_real(r.summary.final_gap) << '\n';
    series.push_back({eps[i], static_cast<double>(r.summary.total_grad_evals)});
  }
  try {
    std::cout << "exponent=" << format_real(fit_rate_exponent(series, false)) << '\n'
              << "exponent_log_deflated=" << format_real(fit_rate_exponent(series, true)) << '\n';
  } catch (const std::invalid_argument& e) {
    std::cout << "exponent=n/a (" << e.what() << ")\n";
  }
  return 0;
}

void print_check(const SuiteResult& s, const CheckResult& c) {
  std::cout << describe(s.cell) << ' ' << s.suite << ' ' << c.name << " samples=" << c.samples
            << " violations=" << c.violations << " worst_slack=" << format_real(c.worst_slack)
            << '\n';
}

int cmd_verify(std::size_t samples, std::uint64_t seed) {
  bool ok = true;
  for (const auto& cell : default_grid()) {
    for (const auto& suite : {geometry_suite(cell, samples, seed), sandwich_suite(cell, samples, seed),
                              derivative_suite(cell, samples, seed)}) {
      for (const auto& c : suite.checks) print_check(suite, c);
      if (suite.suite == "sandwich") {
        const MapFrame frame(AmbientPoint::pole(cell.d, cell.sign == Sign::Spherical
                                                            ? CurvatureClass::spherical()
                                                            : CurvatureClass::hyperbolic()),
                             cell.R);
        const auto k = deformation_constants(frame, 1.0);
        std::cout << describe(cell) << " sandwich ratio_range min=" << format_real(suite.ratio_min)
                  << " max=" << format_real(suite.ratio_max) << " gamma_p=" << format_real(k.gamma_p)
                  << " inv_gamma_n=" << format_real(1.0 / k.gamma_n) << '\n';
      }
      ok = ok && suite.ok();
    }
  }
  std::cout << "verify: " << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? 0 : 1;
}

int report_error(const std::string& kind, const std::string& msg, int code) {
  std::string flat = msg;
  for (auto& ch : flat) {
    if (ch == '\n') ch = ' ';
  }
  std::cerr << "error: " << kind << ": " << flat << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Accelerated first-order optimization on constant-curvature manifolds"};
  app.require_subcommand(1);

  std::string config;
  Overrides run_o;
  auto* run = app.add_subcommand("run", "run one configured experiment");
  run->add_option("--config", config, "key=value config file")->check(CLI::ExistingFile);
  add_overrides(run, run_o, true);

  std::string sweep_config;
  Overrides sweep_o;
  std::string epsilons;
  std::string out_dir;
  auto* sweep = app.add_subcommand("sweep", "run a config over several epsilons and fit the rate");
  sweep->add_option("--config", sweep_config, "key=value config file")->check(CLI::ExistingFile);
  sweep->add_option("--epsilons", epsilons, "comma separated list")->required();
  sweep->add_option("--output-dir", out_dir, "directory for CSV traces")->required();
  add_overrides(sweep, sweep_o, false);

  std::size_t samples = 10000;
  std::uint64_t vseed = 1;
  auto* verify = app.add_subcommand("verify", "sampled property suites, worst slack per inequality");
  verify->add_option("--samples", samples, "samples per grid cell");
  verify->add_option("--seed", vseed, "sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), 2);
  }

  try {
    if (*run) return cmd_run(config, run_o);
    if (*sweep) return cmd_sweep(sweep_config, sweep_o, epsilons, out_dir);
    if (*verify) return cmd_verify(samples, vseed);
  } catch (const ConfigError& e) {
    std::string where = e.field.empty() ? "" : " [field " + e.field + "]";
    return report_error("config", e.what() + where, 2);
  } catch (const GeometryError& e) {
    return report_error("geometry", e.what(), 3);
  } catch (const LineSearchError& e) {
    return report_error("line_search", e.what(), 4);
  } catch (const std::exception& e) {
    return report_error("runtime", e.what(), 1);
  }
  return 0;
}
