#pragma once

// Anchor-set files and random Frechet instances.
//
// File format: a header line "# class=<spherical|hyperbolic> d=<int>"
// followed by one anchor per line as d+1 whitespace-separated ambient
// coordinates of the unit-curvature model. Blank lines and further '#'
// lines are ignored.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "geoaccel/errors.hpp"
#include "geoaccel/manifold.hpp"

namespace geoaccel {

struct AnchorSet {
  CurvatureClass cls;
  int d = 0;
  std::vector<AmbientPoint> anchors;
};

inline AnchorSet parse_anchor_set(std::istream& in, const std::string& source = "<anchors>") {
  AnchorSet out;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  const auto fail = [&](const std::string& msg) {
    throw ConfigError(source + ":" + std::to_string(lineno) + ": " + msg, lineno, "anchors");
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      if (header) continue;
      std::istringstream hs(line.substr(first + 1));
      std::string tok;
      bool have_class = false;
      bool have_d = false;
      while (hs >> tok) {
        if (tok.rfind("class=", 0) == 0) {
          const auto v = tok.substr(6);
          if (v == "spherical") {
            out.cls = CurvatureClass::spherical();
          } else if (v == "hyperbolic") {
            out.cls = CurvatureClass::hyperbolic();
          } else {
            fail("unknown class '" + v + "'");
          }
          have_class = true;
        } else if (tok.rfind("d=", 0) == 0) {
          try {
            out.d = std::stoi(tok.substr(2));
          } catch (const std::exception&) {
            fail("bad dimension '" + tok.substr(2) + "'");
          }
          if (out.d < 1) fail("dimension must be >= 1");
          have_d = true;
        }
      }
      if (!have_class || !have_d) fail("header must read '# class=<spherical|hyperbolic> d=<int>'");
      header = true;
      continue;
    }
    if (!header) fail("anchor line before the '# class=... d=...' header");
    std::istringstream ls(line);
    std::vector<double> v;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        fail("not a number: '" + tok + "'");
      }
    }
    if (static_cast<int>(v.size()) != out.d + 1) {
      fail("expected " + std::to_string(out.d + 1) + " coordinates, got " +
           std::to_string(v.size()));
    }
    Vector p = Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    // Reject points that are not on the model before re-projection hides it.
    const double q = ambient_inner(out.cls.sign, p, p);
    const double expect = out.cls.sign == Sign::Spherical ? 1.0 : -1.0;
    if (std::abs(q - expect) > 1e-6 * std::max(1.0, p.squaredNorm()) ||
        (out.cls.sign == Sign::Hyperbolic && p(out.d) <= 0.0)) {
      fail("anchor is not on the unit " + to_string(out.cls.sign) + " model");
    }
    out.anchors.emplace_back(std::move(p), out.cls);
  }
  if (!header) fail("missing '# class=... d=...' header");
  if (out.anchors.empty()) fail("no anchors");
  return out;
}

inline AnchorSet read_anchor_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open anchor file '" + path + "'", 0, "anchors");
  return parse_anchor_set(in, path);
}

inline void write_anchor_set(std::ostream& out, const AnchorSet& set) {
  out << "# class=" << to_string(set.cls.sign) << " d=" << set.d << '\n';
  out.precision(17);
  for (const auto& a : set.anchors) {
    const auto& c = a.coords();
    for (Eigen::Index i = 0; i < c.size(); ++i) out << (i ? " " : "") << c(i);
    out << '\n';
  }
}

inline Vector random_unit(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Vector u(d);
  do {
    for (int i = 0; i < d; ++i) u(i) = n01(rng);
  } while (u.norm() < 1e-12);
  return u / u.norm();
}

/// Random direction in T_base, scaled to `length`.
inline TangentVector random_tangent(const AmbientPoint& base, double length, std::mt19937_64& rng) {
  const int d = base.dim();
  for (;;) {
    TangentVector t(base, random_unit(d + 1, rng));
    const double n = t.norm();
    if (n > 1e-8) return t.scaled(length / n);
  }
}

/// Random point whose distance from `center` is `radius * u^(1/d)` for a
/// uniform u, i.e. roughly uniform in the tangent ball.
inline AmbientPoint random_in_ball(const AmbientPoint& center, double radius, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double r = radius * std::pow(u01(rng), 1.0 / center.dim());
  return exp_map(random_tangent(center, r, rng));
}

/// Anchors of a random Frechet instance inside the R-ball around the pole:
/// a cluster of radius R/2 around a point at distance R/2 from the pole, so
/// that the minimizer sits away from the starting point.
inline std::vector<AmbientPoint> random_anchors(CurvatureClass cls, int d, double R,
                                                std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto pole = AmbientPoint::pole(d, cls);
  const auto hub = exp_map(random_tangent(pole, 0.5 * R, rng));
  std::vector<AmbientPoint> out;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) out.push_back(random_in_ball(hub, 0.5 * R, rng));
  return out;
}

enum class WeightScheme { Uniform, Random };

inline std::vector<double> make_weights(WeightScheme scheme, std::size_t count, std::uint64_t seed) {
  std::vector<double> w(count, 1.0);
  if (scheme == WeightScheme::Random) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    for (auto& x : w) x = u(rng);
  }
  double s = 0.0;
  for (double x : w) s += x;
  for (auto& x : w) x /= s;
  return w;
}

}  // namespace geoaccel
