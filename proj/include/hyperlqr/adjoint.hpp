#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hyperlqr/cost.hpp"
#include "hyperlqr/simulate.hpp"

namespace hyperlqr {

/// Co-states on the forward time grid.
///
/// The interior nodes carry the exact discrete adjoint of the upwind scheme
/// used by `simulate`, rescaled by 1/dx so that it approximates
///   -l1_t =  eps1 l1_x + c2 l2 + Q1(u),   l1(1,t) = 0,
///   -l2_t = -eps2 l2_x + c1 l1 + Q2(v),   l2(0,t) = q eps1/eps2 l1(0,t),
///   l1(x,T) = Pf1(u(.,T)),  l2(x,T) = Pf2(v(.,T)).
/// Boundary nodes hold the boundary-condition values, except l2 at x = 1,
/// which stores the trace for which R U(t_n) + eps2 l2(1,t_n) is the exact
/// derivative of the discrete cost with respect to U(t_n) divided by the
/// trapezoid weight of t_n.
struct CostateTrajectory {
  Grid1D grid;
  TimeGrid time_grid;
  std::vector<Eigen::VectorXd> lambda1;
  std::vector<Eigen::VectorXd> lambda2;

  Field lambda1_at(int n) const { return {grid, lambda1.at(static_cast<std::size_t>(n))}; }
  Field lambda2_at(int n) const { return {grid, lambda2.at(static_cast<std::size_t>(n))}; }
};

/// Backward march of the co-state system along a complete forward trajectory.
/// Throws NumericalBlowUp on NaN/Inf.
CostateTrajectory solve_costates(const Trajectory& traj, const CostWeights& w);

/// g(t_n) = R U(t_n) + eps2 l2(1, t_n). The directional derivative of
/// total_cost along dU equals time_inner_product(g, dU).
ControlSignal control_gradient(const Trajectory& traj, const CostateTrajectory& costates, const CostWeights& w);

struct SweepOptions {
  int max_iter = 500;
  /// Stop when the discrete L2(0,T) norm of the gradient is <= tol.
  double tol = 1e-7;
  /// Trial step used when the curvature probe is not positive.
  double step_size = 1.0;
  double armijo_factor = 1e-4;
  int max_halvings = 30;
  std::optional<Eigen::VectorXd> initial_control;
};

struct SweepReport {
  int iterations = 0;
  double final_gradient_norm = 0.0;
  /// max_n |R U(t_n) + eps2 l2(1,t_n)| at the returned control.
  double final_stationarity = 0.0;
  /// cost_history[0] = J(U_0); later entries subtract the exact decrease of
  /// each accepted step, so the history is non-increasing.
  std::vector<double> cost_history;
  /// max |cost_history[k] - J(U_k)| with J evaluated directly.
  double cost_drift = 0.0;
  bool converged = false;
  std::string message;
};

struct SweepResult {
  ControlSignal control;
  Trajectory trajectory;
  CostateTrajectory costates;
  SweepReport report;
};

/// Open-loop optimal control by forward-backward sweeps: simulate, march the
/// co-states, form the gradient, and step along a Fletcher-Reeves conjugate
/// direction. The step minimizes the quadratic cost exactly along the
/// direction, using the cost J_d of the plant's response to the direction alone
/// (zero initial data); Armijo backtracking guards the case J_d <= 0.
///
/// The sweep runs its forward and backward marches in long double. For
/// strongly unstable plants the co-state trace at x = 1 is a sum of terms many
/// orders of magnitude larger than the gradient, and in double precision the
/// gradient stops resolving below roughly 1e-16 times those terms.
/// The returned trajectory and co-states are rounded to double.
SweepResult forward_backward_sweep(const SystemParams& params, const Field& u0, const Field& v0,
                                   const CostWeights& w, const TimeGrid& time_grid,
                                   const SweepOptions& opts = {});

}  // namespace hyperlqr
