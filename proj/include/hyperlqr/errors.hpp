#pragma once

#include <stdexcept>
#include <string>

namespace hyperlqr {

/// Precondition of an operation was not met (mismatched grids, bad sizes,
/// out-of-range indices).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Explicit time step too large for the transport speeds on the grid.
class CflViolation : public std::runtime_error {
 public:
  CflViolation(double dt, double dx, double speed, double courant)
      : std::runtime_error("CFL violation: dt=" + std::to_string(dt) +
                           " dx=" + std::to_string(dx) +
                           " speed=" + std::to_string(speed) +
                           " courant=" + std::to_string(courant) + " > 1"),
        dt_(dt),
        dx_(dx),
        speed_(speed),
        courant_(courant) {}

  double dt() const { return dt_; }
  double dx() const { return dx_; }
  double speed() const { return speed_; }
  double courant() const { return courant_; }

 private:
  double dt_, dx_, speed_, courant_;
};

/// A march produced NaN/Inf or exceeded a blow-up threshold.
class NumericalBlowUp : public std::runtime_error {
 public:
  NumericalBlowUp(const std::string& what, int step, double time)
      : std::runtime_error(what + " (step " + std::to_string(step) +
                           ", t=" + std::to_string(time) + ")"),
        step_(step),
        time_(time) {}

  int step() const { return step_; }
  double time() const { return time_; }

 private:
  int step_;
  double time_;
};

/// An iterative solver stopped without meeting its tolerance.
class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid scenario configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hyperlqr
