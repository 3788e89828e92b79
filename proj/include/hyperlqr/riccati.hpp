#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "hyperlqr/cost.hpp"
#include "hyperlqr/grid.hpp"
#include "hyperlqr/simulate.hpp"
#include "hyperlqr/system.hpp"

namespace hyperlqr {

/// Time-indexed Riccati kernels. Index n refers to t_n of `time_grid`.
struct RiccatiKernelSolution {
  TimeGrid time_grid;
  /// Time indices for which full P1/P2 slices are stored (ascending).
  std::vector<int> slice_steps;
  std::vector<Kernel2D> P1;
  std::vector<Kernel2D> P2;
  /// g(y, t_n) = -(eps2/R) P2(1, y, t_n) for every n.
  std::vector<Eigen::VectorXd> gain_rows;
  /// max |c1(x) P1 + c2(x) P2| per time node.
  std::vector<double> constraint_residual;
  /// max(|P1(x,0,t_n)|, |P1(0,y,t_n)|): the two outflow conditions that the
  /// march cannot impose.
  std::vector<double> outflow_bc_residual;

  bool has_slice(int n) const;
  const Kernel2D& P1_at(int n) const;
  const Kernel2D& P2_at(int n) const;
  Field gain_at(int n, const Grid1D& grid) const;
};

struct RiccatiOptions {
  /// |P2| above this aborts the march with NumericalBlowUp.
  double blowup_threshold = 1e8;
  /// Keep every k-th full slice (plus t = 0 and t = T).
  int slice_stride = 1;
};

/// Backward march of
///   -P2_t = -(eps2^2/R) P2(x,1,t) P2(1,y,t) - eps2 P2_y - eps2 P2_x + Q2,
///   -P1_t = eps1 P1_y + eps1 P1_x + Q1,
/// from P2(T) = Pf2, P1(T) = Pf1, with upwind differences in reversed time
/// and the inflow conditions P2(0,y) = P2(x,0) = 0, P1(1,y) = P1(x,1) = 0.
/// The algebraic constraint c1 P1 + c2 P2 = 0 and the two outflow conditions
/// are not imposed; their residuals are reported per time node.
///
/// Requires dt * eps * 2/dx <= 1 for both speeds (CflViolation otherwise).
RiccatiKernelSolution solve_riccati(const SystemParams& params, const CostWeights& w, const TimeGrid& time_grid,
                                    const RiccatiOptions& opts = {});

/// Riccati time grid refining `forward` by the smallest integer factor that
/// satisfies the two-dimensional CFL bound 2 max(eps) dt/dx <= cfl.
TimeGrid riccati_time_grid(const TimeGrid& forward, const SystemParams& params, double cfl);

/// State-feedback law U(t_n) = <g(., t_n), v> on the forward time grid. The
/// Riccati grid must refine `forward` by an integer factor.
FeedbackLaw lqr_feedback(const RiccatiKernelSolution& sol, const Grid1D& grid, const TimeGrid& forward);

/// P1 = -(c2(x)/c1(x)) P2. Throws ContractViolation naming the first node
/// where |c1| < floor.
Kernel2D derive_p1_from_constraint(const Kernel2D& P2, const SystemParams& params, double floor = 1e-12);

struct SteadyStateOptions {
  /// Pseudo time step; <= 0 selects 0.9 dx / (2 max(eps)).
  double pseudo_dt = 0.0;
  /// Stop when max|P^{k+1} - P^k| / pseudo_dt <= tol.
  double tol = 1e-8;
  int max_iter = 200000;
  std::optional<Kernel2D> warm_start_p2;
  std::optional<Kernel2D> warm_start_p1;
  double blowup_threshold = 1e8;
};

struct SteadyStateSolution {
  Kernel2D P2_inf;
  Kernel2D P1_inf;
  int pseudo_time_iterations;
  /// Max-norm of the discrete steady residual of the P2 equation.
  double residual_norm;
  bool converged;
  std::vector<double> residual_history;
  /// max |c1 P1_inf + c2 P2_inf|
  double constraint_residual;

  Field gain(double eps2, double R) const;
};

/// Pseudo-time marching of the same discrete update to a steady state.
/// P1_inf is marched with its own transport equation; the algebraic
/// constraint is reported, not imposed.
SteadyStateSolution solve_steady_state(const SystemParams& params, const CostWeights& w,
                                       const SteadyStateOptions& opts = {});

/// lambda2(x) = int_0^1 P2(x, y) v(y) dy.
Field reconstruct_costate_via_kernel(const Kernel2D& P2_slice, const Field& v);

}  // namespace hyperlqr
