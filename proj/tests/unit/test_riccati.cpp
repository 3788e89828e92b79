#include <cmath>
#include <limits>

#include "doctest.h"
#include "helpers.hpp"
#include "hyperlqr/adjoint.hpp"
#include "hyperlqr/errors.hpp"
#include "hyperlqr/riccati.hpp"

using namespace hyperlqr;

namespace {

TimeGrid riccati_grid(const Grid1D& g, double t_final = 1.0) {
  return TimeGrid::from_cfl(t_final, g.dx(), 2.0, 0.9);  // 2D bound: 2 eps dt / dx <= 0.9
}

}  // namespace

TEST_CASE("zero weights give zero kernels and zero gain") {
  const Grid1D g(30);
  const RiccatiKernelSolution sol = solve_riccati(testing::benchmark_params(g), testing::zero_weights(g), riccati_grid(g));
  for (std::size_t k = 0; k < sol.P2.size(); ++k) {
    CHECK(sol.P2[k].values.isZero(0.0));
    CHECK(sol.P1[k].values.isZero(0.0));
  }
  for (const auto& row : sol.gain_rows) CHECK(row.isZero(0.0));

  CostWeights w = testing::case1_weights(g);
  w.Q2 = Kernel2D::zeros(g);
  w.Pf2 = Kernel2D::zeros(g);
  const RiccatiKernelSolution only_p1 = solve_riccati(testing::benchmark_params(g), w, riccati_grid(g));
  for (const auto& P2 : only_p1.P2) CHECK(P2.values.isZero(0.0));
}

TEST_CASE("final slice equals the terminal weights bit for bit") {
  const Grid1D g(50);
  const CostWeights w = testing::case1_weights(g);
  const TimeGrid tg = riccati_grid(g);
  const RiccatiKernelSolution sol = solve_riccati(testing::benchmark_params(g), w, tg);
  CHECK(sol.has_slice(tg.n_steps()));
  CHECK(sol.P2_at(tg.n_steps()).values == w.Pf2.values);
  CHECK(sol.P1_at(tg.n_steps()).values == w.Pf1.values);
  CHECK(sol.P2_at(tg.n_steps()).values(25, 25) == 5.0);
}

TEST_CASE("inflow boundary zeros hold exactly at every slice") {
  const Grid1D g(40);
  const TimeGrid tg = riccati_grid(g);
  const RiccatiKernelSolution sol = solve_riccati(testing::benchmark_params(g), testing::case1_weights(g), tg);
  REQUIRE(sol.slice_steps.size() == static_cast<std::size_t>(tg.n_steps()) + 1);
  for (std::size_t k = 0; k < sol.P2.size(); ++k) {
    CHECK(sol.P2[k].values.row(0).isZero(0.0));
    CHECK(sol.P2[k].values.col(0).isZero(0.0));
    CHECK(sol.P1[k].values.row(40).isZero(0.0));
    CHECK(sol.P1[k].values.col(40).isZero(0.0));
  }
}

TEST_CASE("one backward step matches a hand-written upwind update") {
  const int N = 100;
  const Grid1D g(N);
  const double dx = g.dx();
  const TimeGrid tg = riccati_grid(g);
  const double dt = tg.dt();

  // Case 1 data: P2(1, y) = 0, so the quadratic term vanishes here.
  {
    const RiccatiKernelSolution sol = solve_riccati(testing::benchmark_params(g), testing::case1_weights(g), tg);
    auto pf2 = [&](int i, int j) { return 5.0 * std::sin(testing::kPi * i * dx) * std::sin(testing::kPi * j * dx); };
    for (auto [i, j] : {std::pair{50, 30}, std::pair{1, 99}, std::pair{73, 73}}) {
      const double q2 = 4.0 * pf2(i, j);
      const double expected = pf2(i, j) + dt * (-(pf2(i, j) - pf2(i - 1, j)) / dx - (pf2(i, j) - pf2(i, j - 1)) / dx + q2);
      CHECK(sol.P2_at(tg.n_steps() - 1).values(i, j) == doctest::Approx(expected).epsilon(1e-12));
    }
  }

  // Pf2 = x y, Q2 = 1, eps2 = 2, R = 4: exercises the quadratic term.
  {
    const SystemParams p = SystemParams::constant(g, 1.0, 2.0, 10.0, 20.0, 1.0);
    CostWeights w = testing::zero_weights(g, 4.0);
    w.Pf2 = sample_kernel([](double x, double y) { return x * y; }, g);
    w.Q2 = Kernel2D(g, Eigen::MatrixXd::Ones(N + 1, N + 1));
    const TimeGrid tg2 = TimeGrid::from_cfl(1.0, dx, 4.0, 0.9);
    const double h = tg2.dt();
    const RiccatiKernelSolution sol = solve_riccati(p, w, tg2);
    for (auto [i, j] : {std::pair{50, 30}, std::pair{100, 100}, std::pair{2, 97}}) {
      const double x = i * dx, y = j * dx;
      const double expected = x * y + h * (-2.0 * (x * y - (x - dx) * y) / dx - 2.0 * (x * y - x * (y - dx)) / dx -
                                           (4.0 / 4.0) * (x * 1.0) * (1.0 * y) + 1.0);
      CHECK(sol.P2_at(tg2.n_steps() - 1).values(i, j) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("gain rows apply -(eps2/R) P2(1, y) to the stored state") {
  const Grid1D g(40);
  const SystemParams p = SystemParams::constant(g, 1.0, 1.0, 1.0, 2.0, 1.0);
  CostWeights w = testing::case1_weights(g);
  w.Pf2 = sample_kernel([](double x, double y) { return x * y; }, g);
  w.R = 2.0;
  const TimeGrid forward = TimeGrid::from_cfl(1.0, g.dx(), 1.0, 0.9);
  const TimeGrid fine = riccati_time_grid(forward, p, 0.9);
  CHECK(fine.n_steps() == 2 * forward.n_steps());
  const RiccatiKernelSolution sol = solve_riccati(p, w, fine);
  const FeedbackLaw law = lqr_feedback(sol, g, forward);
  const Trajectory tr = simulate(p, testing::sine(g), testing::sine(g), law, forward);

  const Field pf2_row(g, w.Pf2.values.row(40).transpose());
  const double expected = -(1.0 / 2.0) * inner_product(pf2_row, tr.v_at(forward.n_steps()));
  CHECK(tr.control.values[forward.n_steps()] == doctest::Approx(expected).epsilon(1e-10));
  CHECK_THROWS_AS(lqr_feedback(sol, g, TimeGrid(1.0, 7)), ContractViolation);
}

TEST_CASE("Riccati diagnostics are reported per time node") {
  const Grid1D g(40);
  const TimeGrid tg = riccati_grid(g);
  const RiccatiKernelSolution sol = solve_riccati(testing::benchmark_params(g), testing::case1_weights(g), tg);
  REQUIRE(sol.constraint_residual.size() == static_cast<std::size_t>(tg.n_steps()) + 1);
  // At T the residual is |10 Pf1 + 20 Pf2| = 110 max.
  CHECK(sol.constraint_residual.back() == doctest::Approx(110.0).epsilon(1e-12));
  CHECK(sol.outflow_bc_residual.back() == 0.0);
  CHECK(sol.outflow_bc_residual.front() > 0.0);
}

TEST_CASE("Riccati march rejects CFL violations and reports blow-up") {
  const Grid1D g(40);
  CHECK_THROWS_AS(solve_riccati(testing::benchmark_params(g), testing::case1_weights(g), TimeGrid(1.0, 30)),
                  CflViolation);
  CostWeights w = testing::zero_weights(g);
  w.Pf2 = sample_kernel([](double x, double y) { return -50.0 * x * y; }, g);
  try {
    solve_riccati(testing::benchmark_params(g), w, riccati_grid(g));
    FAIL("expected NumericalBlowUp");
  } catch (const NumericalBlowUp& e) {
    CHECK(e.time() > 0.0);
    CHECK(e.time() < 1.0);
  }
}

TEST_CASE("slice storage honours the stride") {
  const Grid1D g(20);
  const TimeGrid tg = riccati_grid(g);
  RiccatiOptions opts;
  opts.slice_stride = 10;
  const RiccatiKernelSolution sol = solve_riccati(testing::benchmark_params(g), testing::case1_weights(g), tg, opts);
  CHECK(sol.has_slice(0));
  CHECK(sol.has_slice(tg.n_steps()));
  CHECK(sol.has_slice(10));
  CHECK_FALSE(sol.has_slice(11));
  CHECK_THROWS_AS(sol.P2_at(11), ContractViolation);
  CHECK(sol.gain_rows.size() == static_cast<std::size_t>(tg.n_steps()) + 1);
}

TEST_CASE("derive_p1_from_constraint") {
  const Grid1D g(10);
  const Kernel2D P2 = testing::sine_product(g, 3.0);
  CHECK(derive_p1_from_constraint(P2, testing::benchmark_params(g)).values == -2.0 * P2.values);
  CHECK(derive_p1_from_constraint(Kernel2D::zeros(g), testing::benchmark_params(g)).values.isZero(0.0));
  const SystemParams equal = SystemParams::constant(g, 1.0, 1.0, 4.0, 4.0, 1.0);
  CHECK(derive_p1_from_constraint(P2, equal).values == -P2.values);

  SystemParams vanishing = testing::benchmark_params(g);
  vanishing.c1 = Field::sample(g, [](double x) { return x - 0.5; });
  CHECK_THROWS_WITH_AS(derive_p1_from_constraint(P2, vanishing), doctest::Contains("node 5"), ContractViolation);
}

TEST_CASE("steady state with Q2 = 0 is zero from the first iterate") {
  const Grid1D g(20);
  CostWeights w = testing::zero_weights(g);
  const SteadyStateSolution ss = solve_steady_state(testing::benchmark_params(g), w);
  CHECK(ss.converged);
  CHECK(ss.pseudo_time_iterations == 0);
  CHECK(ss.P2_inf.values.isZero(0.0));
}

TEST_CASE("steady state without the quadratic term solves the discrete transport balance") {
  const Grid1D g(30);
  CostWeights w = testing::case1_weights(g);
  w.R = std::numeric_limits<double>::infinity();
  const SystemParams p = testing::benchmark_params(g);
  const SteadyStateSolution ss = solve_steady_state(p, w);
  REQUIRE(ss.converged);
  const Eigen::MatrixXd& P = ss.P2_inf.values;
  const Eigen::MatrixXd& Q = w.Q2.values;
  double residual = 0.0;
  for (int i = 1; i <= 30; ++i) {
    for (int j = 1; j <= 30; ++j) {
      const double lhs = p.eps2 * ((P(i, j) - P(i - 1, j)) / g.dx() + (P(i, j) - P(i, j - 1)) / g.dx());
      residual = std::max(residual, std::abs(lhs - Q(i, j)));
    }
  }
  CHECK(residual <= 1e-8);
  CHECK(ss.residual_history.back() <= 1e-8);
  CHECK(ss.gain(p.eps2, w.R).values.isZero(0.0));
}

TEST_CASE("steady state reports an unconverged run") {
  const Grid1D g(20);
  SteadyStateOptions opts;
  opts.max_iter = 5;
  const SteadyStateSolution ss = solve_steady_state(testing::benchmark_params(g), testing::case1_weights(g), opts);
  CHECK_FALSE(ss.converged);
  CHECK(ss.residual_history.size() == 6);
  CHECK(ss.residual_norm > 1e-8);
}

// The Case 1 weights are expected to give a stabilizing stationary
// gain. The pseudo-time iteration converges, but the closed loop still grows
// by ~1e18 over [0, 3] (see the decisions ledger). Kept as a known failure.
TEST_CASE("Case 1 stationary gain stabilizes over [0, 3]" * doctest::should_fail()) {
  const Grid1D g(100);
  const SystemParams p = testing::benchmark_params(g);
  const CostWeights w = testing::case1_weights(g);
  const SteadyStateSolution ss = solve_steady_state(p, w);
  REQUIRE(ss.converged);
  const TimeGrid tg = TimeGrid::from_cfl(3.0, g.dx(), 1.0, 0.9);
  const Trajectory tr = simulate(p, testing::sine(g), testing::sine(g), FeedbackLaw::lqr_gain(ss.gain(1.0, 1.0), tg.n_steps()), tg);
  const int quarter = tg.n_steps() / 4;
  for (int n = quarter; n <= tg.n_steps(); n += quarter) {
    CHECK(l2_norm(tr.u_at(n)) + l2_norm(tr.v_at(n)) < l2_norm(tr.u_at(n - quarter)) + l2_norm(tr.v_at(n - quarter)));
  }
}

TEST_CASE("kernel reconstruction of lambda2") {
  const Grid1D g(60);
  CHECK(reconstruct_costate_via_kernel(testing::sine_product(g, 5.0), Field::zeros(g)).values.isZero(0.0));

  // At t = T with Q2 = 0 the interior adjoint nodes are exactly Pf2(v(T)).
  const TimeGrid tg = TimeGrid::from_cfl(1.0, g.dx(), 1.0, 0.9);
  const SystemParams p = testing::benchmark_params(g);
  CostWeights w = testing::case1_weights(g);
  w.Q2 = Kernel2D::zeros(g);
  const Trajectory tr = simulate(p, testing::sine(g), testing::sine(g), FeedbackLaw::zero(), tg);
  const CostateTrajectory lam = solve_costates(tr, w);
  const Field rec = reconstruct_costate_via_kernel(w.Pf2, tr.v_at(tg.n_steps()));
  const Eigen::VectorXd diff = (rec.values - lam.lambda2.back()).segment(1, 59);
  CHECK(diff.cwiseAbs().maxCoeff() <= 1e-12 * rec.values.cwiseAbs().maxCoeff());
  CHECK_THROWS_AS(reconstruct_costate_via_kernel(w.Pf2, Field::zeros(Grid1D(10))), ContractViolation);
}
