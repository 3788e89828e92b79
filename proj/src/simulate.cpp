#include "hyperlqr/simulate.hpp"

#include <cmath>
#include <string>

#include "hyperlqr/errors.hpp"

namespace hyperlqr {

namespace {

// Squared L2 norms and quadratic costs overflow past this.
constexpr double kStateLimit = 1e150;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_grid(const Grid1D& expected, const Grid1D& got, const char* what) {
  if (!(expected == got)) {
    throw ContractViolation(std::string(what) + ": grid has " + std::to_string(got.n_cells()) +
                            " cells, expected " + std::to_string(expected.n_cells()));
  }
}

// Linear functional U = <a, u> + <b, v>; either weight may be absent.
struct LinearForm {
  const Eigen::VectorXd* on_u = nullptr;
  const Eigen::VectorXd* on_v = nullptr;
};

// Sets u[0] = q v[0] and v[N] to the boundary control for this step; returns
// the control value.
double close_boundaries(const FeedbackLaw& law, int step, double q, double dx,
                        Eigen::VectorXd& u, Eigen::VectorXd& v) {
  const Eigen::Index last = v.size() - 1;
  u[0] = q * v[0];

  LinearForm form;
  double fixed = 0.0;
  bool linear = std::visit(
      Overloaded{
          [&](const law::Zero&) { return false; },
          [&](const law::OpenLoop& ol) {
            fixed = ol.signal.values[step];
            return false;
          },
          [&](const law::LqrGain& g) {
            form.on_v = &g.rows[static_cast<std::size_t>(step)];
            return true;
          },
          [&](const law::Backstepping& b) {
            form.on_u = &b.gains.kvu_trace;
            form.on_v = &b.gains.kvv_trace;
            return true;
          },
      },
      law.variant());

  if (!linear) {
    v[last] = fixed;
    return fixed;
  }

  // U = <a,u> + <b,v> with v[last] = U itself carrying weight dx/2.
  double rest = 0.0;
  double self = 0.0;
  if (form.on_u != nullptr) rest += detail::trapezoid_dot(*form.on_u, u, dx);
  if (form.on_v != nullptr) {
    const Eigen::VectorXd& b = *form.on_v;
    v[last] = 0.0;
    rest += detail::trapezoid_dot(b, v, dx);
    self = 0.5 * dx * b[last];
  }
  const double denom = 1.0 - self;
  if (std::abs(denom) < 1e-12) {
    throw ContractViolation("simulate: boundary feedback closure is singular (1 - w_N b_N = 0)");
  }
  const double U = rest / denom;
  v[last] = U;
  return U;
}

void check_law(const FeedbackLaw& law, const Grid1D& grid, const TimeGrid& tg) {
  std::visit(Overloaded{
                 [](const law::Zero&) {},
                 [&](const law::OpenLoop& ol) {
                   if (!(ol.signal.time_grid == tg)) {
                     throw ContractViolation("simulate: open-loop signal time grid differs");
                   }
                 },
                 [&](const law::LqrGain& g) {
                   check_grid(grid, g.grid, "simulate: lqr gain");
                   if (static_cast<int>(g.rows.size()) != tg.n_steps() + 1) {
                     throw ContractViolation("simulate: lqr gain needs one row per time node");
                   }
                   for (const auto& r : g.rows) {
                     if (r.size() != grid.n_nodes()) throw ContractViolation("simulate: gain row length");
                   }
                 },
                 [&](const law::Backstepping& b) { check_grid(grid, b.gains.grid, "simulate: gains"); },
             },
             law.variant());
}

}  // namespace

FeedbackLaw FeedbackLaw::open_loop(ControlSignal signal) { return FeedbackLaw(law::OpenLoop{std::move(signal)}); }

FeedbackLaw FeedbackLaw::lqr_gain(Grid1D grid, std::vector<Eigen::VectorXd> rows) {
  for (const auto& r : rows) {
    if (r.size() != grid.n_nodes()) throw ContractViolation("FeedbackLaw: gain row length mismatch");
  }
  return FeedbackLaw(law::LqrGain{grid, std::move(rows)});
}

FeedbackLaw FeedbackLaw::lqr_gain(const Field& row, int n_steps) {
  return lqr_gain(row.grid, std::vector<Eigen::VectorXd>(static_cast<std::size_t>(n_steps) + 1, row.values));
}

FeedbackLaw FeedbackLaw::backstepping(BacksteppingGains gains) {
  return FeedbackLaw(law::Backstepping{std::move(gains)});
}

const char* FeedbackLaw::kind() const {
  return std::visit(Overloaded{
                        [](const law::Zero&) { return "zero"; },
                        [](const law::OpenLoop&) { return "open_loop"; },
                        [](const law::LqrGain&) { return "lqr_gain"; },
                        [](const law::Backstepping&) { return "backstepping"; },
                    },
                    law_);
}

double evaluate_feedback(const FeedbackLaw& law, const Field& u, const Field& v, int step) {
  if (step < 0) throw ContractViolation("evaluate_feedback: negative step");
  if (!(u.grid == v.grid)) throw ContractViolation("evaluate_feedback: u and v grids differ");
  return std::visit(
      Overloaded{
          [](const law::Zero&) { return 0.0; },
          [&](const law::OpenLoop& ol) {
            if (step > ol.signal.time_grid.n_steps()) throw ContractViolation("evaluate_feedback: step out of range");
            return ol.signal.values[step];
          },
          [&](const law::LqrGain& g) {
            if (step >= static_cast<int>(g.rows.size())) {
              throw ContractViolation("evaluate_feedback: step out of range");
            }
            check_grid(g.grid, v.grid, "evaluate_feedback");
            return inner_product(Field(g.grid, g.rows[static_cast<std::size_t>(step)]), v);
          },
          [&](const law::Backstepping& b) { return backstepping_control_signal(b.gains, u, v); },
      },
      law.variant());
}

Trajectory simulate(const SystemParams& params, const Field& u0, const Field& v0,
                    const FeedbackLaw& law, const TimeGrid& time_grid) {
  params.validate();
  const Grid1D grid = params.grid();
  check_grid(grid, u0.grid, "simulate: u0");
  check_grid(grid, v0.grid, "simulate: v0");
  check_law(law, grid, time_grid);

  const double dx = grid.dx();
  const double dt = time_grid.dt();
  const double courant = dt * params.max_speed() / dx;
  if (courant > 1.0 + 1e-12) throw CflViolation(dt, dx, params.max_speed(), courant);

  const int N = grid.n_cells();
  const int steps = time_grid.n_steps();
  const double r1 = params.eps1 * dt / dx;
  const double r2 = params.eps2 * dt / dx;
  const Eigen::VectorXd& c1 = params.c1.values;
  const Eigen::VectorXd& c2 = params.c2.values;

  Trajectory traj{grid, time_grid, {}, {}, ControlSignal::zeros(time_grid), params};
  traj.u.reserve(static_cast<std::size_t>(steps) + 1);
  traj.v.reserve(static_cast<std::size_t>(steps) + 1);

  Eigen::VectorXd u = u0.values;
  Eigen::VectorXd v = v0.values;
  traj.control.values[0] = close_boundaries(law, 0, params.q, dx, u, v);
  traj.u.push_back(u);
  traj.v.push_back(v);

  Eigen::VectorXd un(N + 1), vn(N + 1);
  for (int n = 0; n < steps; ++n) {
    for (int i = 1; i <= N; ++i) un[i] = u[i] - r1 * (u[i] - u[i - 1]) + dt * c1[i] * v[i];
    for (int i = 0; i < N; ++i) vn[i] = v[i] + r2 * (v[i + 1] - v[i]) + dt * c2[i] * u[i];
    traj.control.values[n + 1] = close_boundaries(law, n + 1, params.q, dx, un, vn);
    if (!un.allFinite() || !vn.allFinite() || un.cwiseAbs().maxCoeff() > kStateLimit ||
        vn.cwiseAbs().maxCoeff() > kStateLimit) {
      throw NumericalBlowUp("simulate: state beyond 1e150 or non-finite", n + 1, time_grid.time(n + 1));
    }
    u.swap(un);
    v.swap(vn);
    traj.u.push_back(u);
    traj.v.push_back(v);
  }
  return traj;
}

}  // namespace hyperlqr
