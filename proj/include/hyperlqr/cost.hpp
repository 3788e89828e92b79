#pragma once

#include <vector>

#include "hyperlqr/grid.hpp"
#include "hyperlqr/simulate.hpp"

namespace hyperlqr {

/// Weighting kernels of the finite-horizon quadratic cost. R may be +inf,
/// which the Riccati solver reads as "no control term".
struct CostWeights {
  Kernel2D Q1;
  Kernel2D Q2;
  Kernel2D Pf1;
  Kernel2D Pf2;
  double R;

  const Grid1D& grid() const { return Q1.grid; }

  /// R > 0, shared grid, symmetric kernels (|K - K^T| <= 1e-12 max|K|).
  void validate() const;
};

/// 1/2 [<u, Q1 u> + <v, Q2 v> + R U^2].
double running_cost(const Field& u, const Field& v, double U, const CostWeights& w);

struct CostBreakdown {
  double running_u = 0.0;
  double running_v = 0.0;
  double running_control = 0.0;
  double terminal_u = 0.0;
  double terminal_v = 0.0;

  double running() const { return running_u + running_v + running_control; }
  double terminal() const { return terminal_u + terminal_v; }
  double total() const { return running() + terminal(); }
};

/// Trapezoid-in-time integral of the running cost plus the terminal terms.
CostBreakdown cost_breakdown(const Trajectory& traj, const CostWeights& w);
double total_cost(const Trajectory& traj, const CostWeights& w);

/// Running cost at every time node.
std::vector<double> running_cost_series(const Trajectory& traj, const CostWeights& w);

/// Smallest Rayleigh quotient <f, K f>/<f, f> over grid functions, i.e. the
/// smallest eigenvalue of W^{1/2} K W^{1/2} with W the trapezoid weights.
double min_rayleigh_quotient(const Kernel2D& K);

}  // namespace hyperlqr
