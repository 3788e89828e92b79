#include "hyperlqr/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hyperlqr/errors.hpp"

namespace hyperlqr {

namespace {

// One explicit upwind step in reversed time for both kernels.
struct KernelStepper {
  const SystemParams& params;
  const CostWeights& w;
  double dtau;

  double quad_coeff() const { return std::isinf(w.R) ? 0.0 : params.eps2 * params.eps2 / w.R; }

  void step_p2(const Eigen::MatrixXd& P, Eigen::MatrixXd& out) const {
    const auto n = P.rows();
    const auto N = n - 1;
    const double s = params.eps2 * dtau / params.grid().dx();
    const double k = quad_coeff();
    const Eigen::MatrixXd& Q = w.Q2.values;
    out.resize(n, n);
    for (Eigen::Index j = 1; j < n; ++j) {
      for (Eigen::Index i = 1; i < n; ++i) {
        const double p = P(i, j);
        out(i, j) = p - s * (p - P(i - 1, j)) - s * (p - P(i, j - 1)) + dtau * (Q(i, j) - k * P(i, N) * P(N, j));
      }
    }
    out.row(0).setZero();
    out.col(0).setZero();
  }

  void step_p1(const Eigen::MatrixXd& P, Eigen::MatrixXd& out) const {
    const auto n = P.rows();
    const auto N = n - 1;
    const double s = params.eps1 * dtau / params.grid().dx();
    const Eigen::MatrixXd& Q = w.Q1.values;
    out.resize(n, n);
    for (Eigen::Index j = 0; j < N; ++j) {
      for (Eigen::Index i = 0; i < N; ++i) {
        const double p = P(i, j);
        out(i, j) = p + s * (P(i + 1, j) - p) + s * (P(i, j + 1) - p) + dtau * Q(i, j);
      }
    }
    out.row(N).setZero();
    out.col(N).setZero();
  }
};

void check_cfl(const SystemParams& params, double dtau) {
  const double dx = params.grid().dx();
  const double courant = 2.0 * dtau * params.max_speed() / dx;
  if (courant > 1.0 + 1e-12) throw CflViolation(dtau, dx, params.max_speed(), courant);
}

double constraint_residual(const SystemParams& params, const Eigen::MatrixXd& P1, const Eigen::MatrixXd& P2) {
  const Eigen::MatrixXd r = params.c1.values.asDiagonal() * P1 + params.c2.values.asDiagonal() * P2;
  return r.cwiseAbs().maxCoeff();
}

double outflow_residual(const Eigen::MatrixXd& P1) {
  return std::max(P1.col(0).cwiseAbs().maxCoeff(), P1.row(0).cwiseAbs().maxCoeff());
}

Eigen::VectorXd gain_row(const Eigen::MatrixXd& P2, double eps2, double R) {
  if (std::isinf(R)) return Eigen::VectorXd::Zero(P2.cols());
  return -(eps2 / R) * P2.row(P2.rows() - 1).transpose();
}

void check_inputs(const SystemParams& params, const CostWeights& w) {
  params.validate();
  w.validate();
  if (!(params.grid() == w.grid())) throw ContractViolation("Riccati: parameter and weight grids differ");
}

}  // namespace

bool RiccatiKernelSolution::has_slice(int n) const {
  return std::binary_search(slice_steps.begin(), slice_steps.end(), n);
}

const Kernel2D& RiccatiKernelSolution::P1_at(int n) const {
  const auto it = std::lower_bound(slice_steps.begin(), slice_steps.end(), n);
  if (it == slice_steps.end() || *it != n) throw ContractViolation("RiccatiKernelSolution: slice not stored");
  return P1[static_cast<std::size_t>(it - slice_steps.begin())];
}

const Kernel2D& RiccatiKernelSolution::P2_at(int n) const {
  const auto it = std::lower_bound(slice_steps.begin(), slice_steps.end(), n);
  if (it == slice_steps.end() || *it != n) throw ContractViolation("RiccatiKernelSolution: slice not stored");
  return P2[static_cast<std::size_t>(it - slice_steps.begin())];
}

Field RiccatiKernelSolution::gain_at(int n, const Grid1D& grid) const {
  return {grid, gain_rows.at(static_cast<std::size_t>(n))};
}

RiccatiKernelSolution solve_riccati(const SystemParams& params, const CostWeights& w, const TimeGrid& time_grid,
                                    const RiccatiOptions& opts) {
  check_inputs(params, w);
  if (opts.slice_stride < 1) throw ContractViolation("solve_riccati: slice_stride must be positive");
  const double dtau = time_grid.dt();
  check_cfl(params, dtau);

  const Grid1D grid = params.grid();
  const int steps = time_grid.n_steps();
  const auto count = static_cast<std::size_t>(steps) + 1;
  KernelStepper stepper{params, w, dtau};

  RiccatiKernelSolution sol{time_grid, {}, {}, {}, std::vector<Eigen::VectorXd>(count),
                            std::vector<double>(count), std::vector<double>(count)};

  // Slices are collected in reversed order and flipped at the end.
  std::vector<int> steps_rev;
  std::vector<Kernel2D> p1_rev, p2_rev;

  Eigen::MatrixXd P2 = w.Pf2.values;
  Eigen::MatrixXd P1 = w.Pf1.values;
  Eigen::MatrixXd P2n, P1n;

  auto record = [&](int n) {
    const auto k = static_cast<std::size_t>(n);
    sol.gain_rows[k] = gain_row(P2, params.eps2, w.R);
    sol.constraint_residual[k] = constraint_residual(params, P1, P2);
    sol.outflow_bc_residual[k] = outflow_residual(P1);
    if (n == 0 || n == steps || n % opts.slice_stride == 0) {
      steps_rev.push_back(n);
      p1_rev.emplace_back(grid, P1);
      p2_rev.emplace_back(grid, P2);
    }
  };

  record(steps);
  for (int n = steps - 1; n >= 0; --n) {
    stepper.step_p2(P2, P2n);
    stepper.step_p1(P1, P1n);
    P2.swap(P2n);
    P1.swap(P1n);
    if (!P2.allFinite() || !P1.allFinite() || P2.cwiseAbs().maxCoeff() > opts.blowup_threshold) {
      throw NumericalBlowUp("solve_riccati: Riccati kernel blow-up", n, time_grid.time(n));
    }
    record(n);
  }

  sol.slice_steps.assign(steps_rev.rbegin(), steps_rev.rend());
  sol.P1.assign(p1_rev.rbegin(), p1_rev.rend());
  sol.P2.assign(p2_rev.rbegin(), p2_rev.rend());
  return sol;
}

TimeGrid riccati_time_grid(const TimeGrid& forward, const SystemParams& params, double cfl) {
  if (!(cfl > 0.0) || cfl > 1.0) throw ContractViolation("riccati_time_grid: cfl must lie in (0, 1]");
  const double courant = 2.0 * params.max_speed() * forward.dt() / params.grid().dx();
  const auto factor = std::max(1, static_cast<int>(std::ceil(courant / cfl - 1e-9)));
  return {forward.t_final(), forward.n_steps() * factor};
}

FeedbackLaw lqr_feedback(const RiccatiKernelSolution& sol, const Grid1D& grid, const TimeGrid& forward) {
  const int fine = sol.time_grid.n_steps();
  if (sol.time_grid.t_final() != forward.t_final() || fine % forward.n_steps() != 0) {
    throw ContractViolation("lqr_feedback: Riccati grid does not refine the forward grid");
  }
  const int factor = fine / forward.n_steps();
  std::vector<Eigen::VectorXd> rows;
  rows.reserve(static_cast<std::size_t>(forward.n_steps()) + 1);
  for (int n = 0; n <= forward.n_steps(); ++n) rows.push_back(sol.gain_rows[static_cast<std::size_t>(n * factor)]);
  return FeedbackLaw::lqr_gain(grid, std::move(rows));
}

Kernel2D derive_p1_from_constraint(const Kernel2D& P2, const SystemParams& params, double floor) {
  if (!(P2.grid == params.grid())) throw ContractViolation("derive_p1_from_constraint: grid mismatch");
  const Eigen::VectorXd& c1 = params.c1.values;
  const Eigen::VectorXd& c2 = params.c2.values;
  for (Eigen::Index i = 0; i < c1.size(); ++i) {
    if (std::abs(c1[i]) < floor) {
      throw ContractViolation("derive_p1_from_constraint: c1 vanishes at node " + std::to_string(i) +
                              " (x=" + std::to_string(P2.grid.node(static_cast<int>(i))) + ")");
    }
  }
  const Eigen::VectorXd ratio = -(c2.array() / c1.array()).matrix();
  return {P2.grid, ratio.asDiagonal() * P2.values};
}

Field SteadyStateSolution::gain(double eps2, double R) const {
  return {P2_inf.grid, gain_row(P2_inf.values, eps2, R)};
}

SteadyStateSolution solve_steady_state(const SystemParams& params, const CostWeights& w,
                                       const SteadyStateOptions& opts) {
  check_inputs(params, w);
  const Grid1D grid = params.grid();
  const double dtau = opts.pseudo_dt > 0.0 ? opts.pseudo_dt : 0.9 * grid.dx() / (2.0 * params.max_speed());
  check_cfl(params, dtau);

  KernelStepper stepper{params, w, dtau};
  Eigen::MatrixXd P2 = opts.warm_start_p2 ? opts.warm_start_p2->values : Eigen::MatrixXd::Zero(grid.n_nodes(), grid.n_nodes());
  Eigen::MatrixXd P1 = opts.warm_start_p1 ? opts.warm_start_p1->values : Eigen::MatrixXd::Zero(grid.n_nodes(), grid.n_nodes());
  Eigen::MatrixXd P2n, P1n;

  SteadyStateSolution out{Kernel2D::zeros(grid), Kernel2D::zeros(grid), 0, 0.0, false, {}, 0.0};
  for (int it = 0; it <= opts.max_iter; ++it) {
    stepper.step_p2(P2, P2n);
    stepper.step_p1(P1, P1n);
    const double r2 = (P2n - P2).cwiseAbs().maxCoeff() / dtau;
    const double r1 = (P1n - P1).cwiseAbs().maxCoeff() / dtau;
    out.residual_history.push_back(r2);
    out.residual_norm = r2;
    out.pseudo_time_iterations = it;
    if (std::max(r1, r2) <= opts.tol) {
      out.converged = true;
      break;
    }
    if (it == opts.max_iter) break;
    P2.swap(P2n);
    P1.swap(P1n);
    if (!P2.allFinite() || P2.cwiseAbs().maxCoeff() > opts.blowup_threshold) {
      throw NumericalBlowUp("solve_steady_state: kernel blow-up", it + 1, (it + 1) * dtau);
    }
  }
  out.P2_inf = Kernel2D(grid, P2);
  out.P1_inf = Kernel2D(grid, P1);
  out.constraint_residual = constraint_residual(params, P1, P2);
  return out;
}

Field reconstruct_costate_via_kernel(const Kernel2D& P2_slice, const Field& v) {
  return apply_operator(P2_slice, v);
}

}  // namespace hyperlqr
