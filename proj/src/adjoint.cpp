#include "hyperlqr/adjoint.hpp"

#include <cmath>
#include <sstream>

#include "hyperlqr/errors.hpp"

namespace hyperlqr {

namespace {

template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

// Open-loop discrete problem in scalar type S: the upwind march of
// `simulate`, the discrete cost of `total_cost` and the transpose of the march.
template <class S>
struct DiscreteProblem {
  int N;
  int steps;
  S dx, dt, r1, r2, q, R;
  Vec<S> c1, c2, omega, wt;
  Mat<S> Q1, Q2, Pf1, Pf2;

  DiscreteProblem(const SystemParams& p, const CostWeights& w, const TimeGrid& tg)
      : N(p.grid().n_cells()),
        steps(tg.n_steps()),
        dx(static_cast<S>(p.grid().dx())),
        dt(static_cast<S>(tg.dt())),
        r1(static_cast<S>(p.eps1) * dt / dx),
        r2(static_cast<S>(p.eps2) * dt / dx),
        q(static_cast<S>(p.q)),
        R(static_cast<S>(w.R)),
        c1(p.c1.values.cast<S>()),
        c2(p.c2.values.cast<S>()),
        omega(p.grid().trapezoid_weights().cast<S>()),
        wt(steps + 1),
        Q1(w.Q1.values.cast<S>()),
        Q2(w.Q2.values.cast<S>()),
        Pf1(w.Pf1.values.cast<S>()),
        Pf2(w.Pf2.values.cast<S>()) {
    for (int n = 0; n <= steps; ++n) wt[n] = static_cast<S>(tg.weight(n));
  }

  Vec<S> weighted(const Mat<S>& K, const Vec<S>& f) const {
    return omega.cwiseProduct(K * omega.cwiseProduct(f));
  }

  void forward(const Vec<S>& U, const Vec<S>& u0, const Vec<S>& v0, std::vector<Vec<S>>& us,
               std::vector<Vec<S>>& vs) const {
    us.assign(static_cast<std::size_t>(steps) + 1, Vec<S>());
    vs.assign(static_cast<std::size_t>(steps) + 1, Vec<S>());
    Vec<S> u = u0, v = v0;
    u[0] = q * v[0];
    v[N] = U[0];
    us[0] = u;
    vs[0] = v;
    for (int n = 0; n < steps; ++n) {
      Vec<S> un(N + 1), vn(N + 1);
      for (int i = 1; i <= N; ++i) un[i] = u[i] - r1 * (u[i] - u[i - 1]) + dt * c1[i] * v[i];
      for (int i = 0; i < N; ++i) vn[i] = v[i] + r2 * (v[i + 1] - v[i]) + dt * c2[i] * u[i];
      un[0] = q * vn[0];
      vn[N] = U[n + 1];
      u = std::move(un);
      v = std::move(vn);
      us[static_cast<std::size_t>(n) + 1] = u;
      vs[static_cast<std::size_t>(n) + 1] = v;
    }
  }

  S cost(const std::vector<Vec<S>>& us, const std::vector<Vec<S>>& vs, const Vec<S>& U) const {
    S J = 0;
    for (int n = 0; n <= steps; ++n) {
      const auto k = static_cast<std::size_t>(n);
      J += wt[n] * (us[k].dot(weighted(Q1, us[k])) + vs[k].dot(weighted(Q2, vs[k])) + R * U[n] * U[n]) / 2;
    }
    J += (us.back().dot(weighted(Pf1, us.back())) + vs.back().dot(weighted(Pf2, vs.back()))) / 2;
    return J;
  }

  // Backward march of the derivatives a = dJ/du^n, b = dJ/dv^n. `visit(n, a, b)`
  // is called for n = steps, ..., 0.
  template <class Visit>
  void adjoint(const std::vector<Vec<S>>& us, const std::vector<Vec<S>>& vs, Visit&& visit) const {
    Vec<S> a = weighted(Pf1, us.back()) + wt[steps] * weighted(Q1, us.back());
    Vec<S> b = weighted(Pf2, vs.back()) + wt[steps] * weighted(Q2, vs.back());
    visit(steps, a, b);
    Vec<S> an(N + 1), bn(N + 1);
    for (int n = steps - 1; n >= 0; --n) {
      an.setZero();
      bn.setZero();
      // u_i^{n+1} = (1-r1) u_i + r1 u_{i-1} + dt c1_i v_i,  i = 1..N
      for (int i = 1; i <= N; ++i) {
        an[i] += (1 - r1) * a[i];
        an[i - 1] += r1 * a[i];
        bn[i] += dt * c1[i] * a[i];
      }
      // v_i^{n+1} = (1-r2) v_i + r2 v_{i+1} + dt c2_i u_i,  i = 0..N-1
      for (int i = 0; i < N; ++i) {
        bn[i] += (1 - r2) * b[i];
        bn[i + 1] += r2 * b[i];
        an[i] += dt * c2[i] * b[i];
      }
      // u_0^{n+1} = q v_0^{n+1}
      bn[0] += q * (1 - r2) * a[0];
      bn[1] += q * r2 * a[0];
      an[0] += q * dt * c2[0] * a[0];

      const auto k = static_cast<std::size_t>(n);
      an += wt[n] * weighted(Q1, us[k]);
      bn += wt[n] * weighted(Q2, vs[k]);
      a.swap(an);
      b.swap(bn);
      visit(n, a, b);
    }
  }
};

// Boundary nodes follow the co-state boundary conditions; lambda2 at x = 1
// carries the gradient-consistent trace.
template <class S>
void present(const SystemParams& p, const TimeGrid& tg, int n, const Vec<S>& a, const Vec<S>& b,
             CostateTrajectory& out) {
  const Eigen::Index N = a.size() - 1;
  const double dx = p.grid().dx();
  Eigen::VectorXd l1 = a.template cast<double>() / dx;
  Eigen::VectorXd l2 = b.template cast<double>() / dx;
  l1[N] = 0.0;
  l2[0] = p.q * p.eps1 / p.eps2 * l1[0];
  l2[N] = static_cast<double>(b[N] / (static_cast<S>(tg.weight(n)) * static_cast<S>(p.eps2)));
  if (!l1.allFinite() || !l2.allFinite()) throw NumericalBlowUp("solve_costates: non-finite co-state", n, tg.time(n));
  const auto k = static_cast<std::size_t>(n);
  out.lambda1[k] = std::move(l1);
  out.lambda2[k] = std::move(l2);
}

CostateTrajectory empty_costates(const Grid1D& grid, const TimeGrid& tg) {
  const auto count = static_cast<std::size_t>(tg.n_steps()) + 1;
  return {grid, tg, std::vector<Eigen::VectorXd>(count), std::vector<Eigen::VectorXd>(count)};
}

}  // namespace

CostateTrajectory solve_costates(const Trajectory& traj, const CostWeights& w) {
  if (!(traj.grid == w.grid())) throw ContractViolation("solve_costates: trajectory and weights grids differ");
  const DiscreteProblem<double> prob(traj.params, w, traj.time_grid);
  CostateTrajectory out = empty_costates(traj.grid, traj.time_grid);
  prob.adjoint(traj.u, traj.v, [&](int n, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    present(traj.params, traj.time_grid, n, a, b, out);
  });
  return out;
}

ControlSignal control_gradient(const Trajectory& traj, const CostateTrajectory& costates, const CostWeights& w) {
  if (!(traj.grid == costates.grid) || !(traj.time_grid == costates.time_grid)) {
    throw ContractViolation("control_gradient: trajectory and co-states do not match");
  }
  const int steps = traj.time_grid.n_steps();
  const int N = traj.grid.n_cells();
  Eigen::VectorXd g(steps + 1);
  for (int n = 0; n <= steps; ++n) {
    const double U = traj.control.values[n];
    g[n] = (U == 0.0 ? 0.0 : w.R * U) + traj.params.eps2 * costates.lambda2[static_cast<std::size_t>(n)][N];
  }
  return {traj.time_grid, std::move(g)};
}

namespace {

using Real = long double;

struct SweepState {
  std::vector<Vec<Real>> u, v;
  Vec<Real> gradient;
  Real cost = 0;
};

SweepState evaluate(const DiscreteProblem<Real>& prob, const Vec<Real>& u0, const Vec<Real>& v0,
                    const Vec<Real>& U) {
  SweepState s;
  prob.forward(U, u0, v0, s.u, s.v);
  s.cost = prob.cost(s.u, s.v, U);
  s.gradient.resize(prob.steps + 1);
  prob.adjoint(s.u, s.v, [&](int n, const Vec<Real>&, const Vec<Real>& b) {
    s.gradient[n] = prob.R * U[n] + b[prob.N] / prob.wt[n];
  });
  if (!std::isfinite(static_cast<double>(s.cost)) || !s.gradient.allFinite()) {
    throw NumericalBlowUp("forward_backward_sweep: non-finite state or co-state", 0, 0.0);
  }
  return s;
}

}  // namespace

SweepResult forward_backward_sweep(const SystemParams& params, const Field& u0, const Field& v0,
                                   const CostWeights& w, const TimeGrid& time_grid, const SweepOptions& opts) {
  params.validate();
  w.validate();
  if (!std::isfinite(w.R)) throw ContractViolation("forward_backward_sweep: R must be finite");
  if (opts.max_iter < 1 || !(opts.tol >= 0.0)) throw ContractViolation("forward_backward_sweep: bad options");
  if (!(params.grid() == w.grid()) || !(params.grid() == u0.grid) || !(params.grid() == v0.grid)) {
    throw ContractViolation("forward_backward_sweep: grid mismatch");
  }
  const double courant = time_grid.dt() * params.max_speed() / params.grid().dx();
  if (courant > 1.0 + 1e-12) throw CflViolation(time_grid.dt(), params.grid().dx(), params.max_speed(), courant);

  const DiscreteProblem<Real> prob(params, w, time_grid);
  const Vec<Real> U0 = u0.values.cast<Real>();
  const Vec<Real> V0 = v0.values.cast<Real>();
  const Vec<Real> zero = Vec<Real>::Zero(prob.N + 1);
  auto inner = [&](const Vec<Real>& a, const Vec<Real>& b) { return a.cwiseProduct(b).dot(prob.wt); };

  Vec<Real> U = Vec<Real>::Zero(prob.steps + 1);
  if (opts.initial_control) {
    if (opts.initial_control->size() != prob.steps + 1) {
      throw ContractViolation("forward_backward_sweep: initial control length differs from the time grid");
    }
    U = opts.initial_control->cast<Real>();
  }

  SweepReport report;
  SweepState state = evaluate(prob, U0, V0, U);
  report.cost_history.push_back(static_cast<double>(state.cost));

  Vec<Real> prev_gradient, prev_direction;
  std::vector<Vec<Real>> du, dv;
  Real tracked = state.cost;

  for (int it = 0;; ++it) {
    const Real g2 = inner(state.gradient, state.gradient);
    const double gnorm = static_cast<double>(std::sqrt(g2));
    report.iterations = it;
    report.final_gradient_norm = gnorm;
    if (gnorm <= opts.tol) {
      report.converged = true;
      report.message = "gradient norm below tolerance";
      break;
    }
    if (it >= opts.max_iter) {
      report.message = "max_iter reached";
      break;
    }

    // Fletcher-Reeves direction. With the exact step below this is linear
    // conjugate gradients on the quadratic cost.
    Vec<Real> d = -state.gradient;
    if (prev_gradient.size() > 0) d += g2 / inner(prev_gradient, prev_gradient) * prev_direction;
    Real slope = inner(state.gradient, d);
    if (!(slope < 0)) {
      d = -state.gradient;
      slope = -g2;
    }

    // J(U + a d) - J(U) = a slope + a^2 J_d, with J_d the cost of the
    // response to d from rest.
    prob.forward(d, zero, zero, du, dv);
    const Real curvature = prob.cost(du, dv, d);
    Real alpha = curvature > 0 ? -slope / (2 * curvature) : static_cast<Real>(opts.step_size);

    bool accepted = false;
    Real decrease = 0;
    for (int k = 0; k <= opts.max_halvings; ++k) {
      decrease = alpha * slope + alpha * alpha * curvature;
      if (decrease <= static_cast<Real>(opts.armijo_factor) * alpha * slope) {
        accepted = true;
        break;
      }
      alpha /= 2;
    }
    if (!accepted) {
      std::ostringstream msg;
      msg << "line search failed after " << opts.max_halvings << " halvings (slope "
          << static_cast<double>(slope) << ", curvature " << static_cast<double>(curvature) << ")";
      report.message = msg.str();
      break;
    }

    U += alpha * d;
    prev_gradient = std::move(state.gradient);
    prev_direction = std::move(d);
    state = evaluate(prob, U0, V0, U);
    // The quadratic identity gives the decrease exactly; J(U) evaluated
    // directly carries round-off larger than late decreases.
    tracked += decrease;
    report.cost_drift = std::max(report.cost_drift, static_cast<double>(std::abs(tracked - state.cost)));
    report.cost_history.push_back(static_cast<double>(tracked));
  }

  const Grid1D grid = params.grid();
  Trajectory traj{grid, time_grid, {}, {}, ControlSignal(time_grid, U.cast<double>()), params};
  for (std::size_t k = 0; k < state.u.size(); ++k) {
    traj.u.push_back(state.u[k].cast<double>());
    traj.v.push_back(state.v[k].cast<double>());
  }
  CostateTrajectory lam = empty_costates(grid, time_grid);
  double stationarity = 0.0;
  prob.adjoint(state.u, state.v, [&](int n, const Vec<Real>& a, const Vec<Real>& b) {
    present(params, time_grid, n, a, b, lam);
    const Real r = prob.R * U[n] + b[prob.N] / prob.wt[n];
    stationarity = std::max(stationarity, static_cast<double>(std::abs(r)));
  });
  report.final_stationarity = stationarity;

  return {traj.control, std::move(traj), std::move(lam), std::move(report)};
}

}  // namespace hyperlqr
