#pragma once

#include <Eigen/Dense>

#include "hyperlqr/grid.hpp"

namespace hyperlqr {

/// Plant data for
///   u_t = -eps1 u_x + c1(x) v,   v_t = eps2 v_x + c2(x) u,
///   u(0,t) = q v(0,t),           v(1,t) = U(t).
struct SystemParams {
  double eps1;
  double eps2;
  Field c1;
  Field c2;
  double q;

  static SystemParams constant(const Grid1D& grid, double eps1, double eps2, double c1,
                               double c2, double q);

  const Grid1D& grid() const { return c1.grid; }
  double max_speed() const { return eps1 > eps2 ? eps1 : eps2; }

  /// Throws ContractViolation unless eps1, eps2 > 0, q != 0 and c1, c2 share a grid.
  void validate() const;
};

struct ControlSignal {
  TimeGrid time_grid;
  Eigen::VectorXd values;

  ControlSignal(TimeGrid tg, Eigen::VectorXd v);
  static ControlSignal zeros(const TimeGrid& tg);
};

/// Discrete L2(0,T) inner product of two control signals (trapezoid in time).
double time_inner_product(const ControlSignal& a, const ControlSignal& b);

}  // namespace hyperlqr
