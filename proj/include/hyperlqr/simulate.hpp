#pragma once

#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "hyperlqr/backstepping.hpp"
#include "hyperlqr/grid.hpp"
#include "hyperlqr/system.hpp"

namespace hyperlqr {

/// Forward solution on the stored time grid. u[n], v[n] are the node values
/// at t_n; control.values[n] = v[n][last] and u[n][0] = q v[n][0] hold exactly.
struct Trajectory {
  Grid1D grid;
  TimeGrid time_grid;
  std::vector<Eigen::VectorXd> u;
  std::vector<Eigen::VectorXd> v;
  ControlSignal control;
  SystemParams params;

  Field u_at(int n) const { return {grid, u.at(static_cast<std::size_t>(n))}; }
  Field v_at(int n) const { return {grid, v.at(static_cast<std::size_t>(n))}; }
};

namespace law {

struct Zero {};

struct OpenLoop {
  ControlSignal signal;
};

/// U(t_n) = <g(., t_n), v(., t_n)> with rows[n] = g(., t_n).
struct LqrGain {
  Grid1D grid;
  std::vector<Eigen::VectorXd> rows;
};

struct Backstepping {
  BacksteppingGains gains;
};

}  // namespace law

class FeedbackLaw {
 public:
  using Variant = std::variant<law::Zero, law::OpenLoop, law::LqrGain, law::Backstepping>;

  static FeedbackLaw zero() { return FeedbackLaw(law::Zero{}); }
  static FeedbackLaw open_loop(ControlSignal signal);
  static FeedbackLaw lqr_gain(Grid1D grid, std::vector<Eigen::VectorXd> rows);
  /// Constant-in-time gain row.
  static FeedbackLaw lqr_gain(const Field& row, int n_steps);
  static FeedbackLaw backstepping(BacksteppingGains gains);

  const Variant& variant() const { return law_; }
  const char* kind() const;

 private:
  explicit FeedbackLaw(Variant law) : law_(std::move(law)) {}
  Variant law_;
};

/// Control value of the law on a given snapshot at time index `step`.
double evaluate_feedback(const FeedbackLaw& law, const Field& u, const Field& v, int step);

/// Explicit first-order upwind march of the plant. u uses backward
/// differences (inflow u(0) = q v(0)), v forward differences (inflow
/// v(1) = U). Coupling terms are explicit at the old level. State-feedback
/// laws are closed at the new level: v(1, t_{n+1}) is chosen so that the law
/// evaluated on the stored snapshot returns exactly that value.
///
/// Throws CflViolation if dt * max(eps1, eps2) / dx > 1 and NumericalBlowUp
/// on NaN/Inf or |state| > 1e150.
Trajectory simulate(const SystemParams& params, const Field& u0, const Field& v0,
                    const FeedbackLaw& law, const TimeGrid& time_grid);

}  // namespace hyperlqr
