#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace geoaccel {

/// Raised when an input violates a geometric precondition (point off the
/// manifold, outside the working ball, invalid curvature, ...).
class GeometryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised by the binary line search when the probe budget runs out. This
/// means the declared smoothness or deformation constants do not hold for
/// the objective being minimized.
class LineSearchError : public std::runtime_error {
 public:
  LineSearchError(const std::string& what, std::size_t iteration, double lo, double hi,
                  double residual, double eps_hat)
      : std::runtime_error(what),
        iteration(iteration),
        bracket_lo(lo),
        bracket_hi(hi),
        residual(residual),
        eps_hat(eps_hat) {}

  std::size_t iteration;
  double bracket_lo;
  double bracket_hi;
  double residual;
  double eps_hat;
};

/// Invalid experiment configuration. `line` is 0 when the offending value
/// came from the command line rather than the config file.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::size_t line, std::string field)
      : std::runtime_error(what), line(line), field(std::move(field)) {}

  std::size_t line;
  std::string field;
};

}  // namespace geoaccel
