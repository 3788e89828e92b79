#include "hyperlqr/cost.hpp"

#include <cmath>

#include "hyperlqr/errors.hpp"

namespace hyperlqr {

namespace {

double quadratic_form(const Eigen::MatrixXd& K, const Eigen::VectorXd& f, double dx) {
  return detail::trapezoid_dot(f, detail::apply_kernel(K, f, dx), dx);
}

void check_symmetric(const Kernel2D& K, const char* name) {
  const double scale = std::max(1.0, K.values.cwiseAbs().maxCoeff());
  if ((K.values - K.values.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ContractViolation(std::string("CostWeights: kernel ") + name + " is not symmetric");
  }
}

}  // namespace

void CostWeights::validate() const {
  if (!(R > 0.0)) throw ContractViolation("CostWeights: R must be strictly positive");
  const Grid1D& g = Q1.grid;
  if (!(Q2.grid == g) || !(Pf1.grid == g) || !(Pf2.grid == g)) {
    throw ContractViolation("CostWeights: kernels live on different grids");
  }
  check_symmetric(Q1, "Q1");
  check_symmetric(Q2, "Q2");
  check_symmetric(Pf1, "Pf1");
  check_symmetric(Pf2, "Pf2");
}

double running_cost(const Field& u, const Field& v, double U, const CostWeights& w) {
  const double uq = inner_product(u, apply_operator(w.Q1, u));
  const double vq = inner_product(v, apply_operator(w.Q2, v));
  const double control = U == 0.0 ? 0.0 : w.R * U * U;
  return 0.5 * (uq + vq + control);
}

CostBreakdown cost_breakdown(const Trajectory& traj, const CostWeights& w) {
  if (!(traj.grid == w.grid())) throw ContractViolation("total_cost: trajectory and weights grids differ");
  const double dx = traj.grid.dx();
  const TimeGrid& tg = traj.time_grid;
  CostBreakdown c;
  for (int n = 0; n <= tg.n_steps(); ++n) {
    const double wt = tg.weight(n);
    const auto k = static_cast<std::size_t>(n);
    const double U = traj.control.values[n];
    c.running_u += wt * 0.5 * quadratic_form(w.Q1.values, traj.u[k], dx);
    c.running_v += wt * 0.5 * quadratic_form(w.Q2.values, traj.v[k], dx);
    if (U != 0.0) c.running_control += wt * 0.5 * w.R * U * U;
  }
  c.terminal_u = 0.5 * quadratic_form(w.Pf1.values, traj.u.back(), dx);
  c.terminal_v = 0.5 * quadratic_form(w.Pf2.values, traj.v.back(), dx);
  return c;
}

double total_cost(const Trajectory& traj, const CostWeights& w) { return cost_breakdown(traj, w).total(); }

std::vector<double> running_cost_series(const Trajectory& traj, const CostWeights& w) {
  std::vector<double> out;
  out.reserve(traj.u.size());
  for (std::size_t n = 0; n < traj.u.size(); ++n) {
    out.push_back(running_cost(traj.u_at(static_cast<int>(n)), traj.v_at(static_cast<int>(n)),
                               traj.control.values[static_cast<Eigen::Index>(n)], w));
  }
  return out;
}

double min_rayleigh_quotient(const Kernel2D& K) {
  const Eigen::VectorXd s = K.grid.trapezoid_weights().cwiseSqrt();
  const Eigen::MatrixXd sym = 0.5 * (K.values + K.values.transpose());
  const Eigen::MatrixXd M = s.asDiagonal() * sym * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace hyperlqr
