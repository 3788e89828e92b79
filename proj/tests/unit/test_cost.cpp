#include <cmath>
#include <limits>

#include "doctest.h"
#include "helpers.hpp"
#include "hyperlqr/cost.hpp"
#include "hyperlqr/errors.hpp"
#include "hyperlqr/simulate.hpp"

using namespace hyperlqr;

namespace {

Trajectory open_loop_run(const Grid1D& g, double scale, double t_final = 1.0) {
  const TimeGrid tg = TimeGrid::from_cfl(t_final, g.dx(), 1.0, 0.9);
  Eigen::VectorXd U(tg.n_steps() + 1);
  for (int n = 0; n <= tg.n_steps(); ++n) U[n] = scale * std::cos(3.0 * tg.time(n));
  const SystemParams p = SystemParams::constant(g, 1.0, 1.0, 1.0, 2.0, 1.0);
  return simulate(p, testing::sine(g, scale), Field::constant(g, 0.2 * scale),
                  FeedbackLaw::open_loop(ControlSignal(tg, U)), tg);
}

}  // namespace

TEST_CASE("running_cost examples") {
  const Grid1D g(200);
  const CostWeights w = testing::case1_weights(g);
  CHECK(running_cost(Field::zeros(g), Field::zeros(g), 0.0, w) == 0.0);
  CHECK(running_cost(Field::zeros(g), Field::zeros(g), 2.0, testing::zero_weights(g)) == 2.0);
  CHECK(running_cost(testing::sine(g), Field::zeros(g), 0.0, w) == doctest::Approx(1.25).epsilon(1e-3));
  CHECK_THROWS_AS(running_cost(Field::zeros(Grid1D(10)), Field::zeros(g), 0.0, w), ContractViolation);
}

TEST_CASE("total_cost examples") {
  const Grid1D g(200);
  const TimeGrid tg = TimeGrid::from_cfl(1.0, g.dx(), 1.0, 0.9);
  const Trajectory zero =
      simulate(testing::benchmark_params(g), Field::zeros(g), Field::zeros(g), FeedbackLaw::zero(), tg);
  CHECK(total_cost(zero, testing::case1_weights(g)) == 0.0);

  // Terminal term only: u(., T) = sin(pi x), Pf1 = sin(pi x) sin(pi y).
  Trajectory tr = zero;
  tr.u.back() = testing::sine(g).values;
  CostWeights w = testing::zero_weights(g, 5.0);
  w.Pf1 = testing::sine_product(g, 1.0);
  CHECK(total_cost(tr, w) == doctest::Approx(0.125).epsilon(1e-3));
}

TEST_CASE("cost breakdown adds up and matches the running series") {
  const Grid1D g(40);
  const Trajectory tr = open_loop_run(g, 1.0);
  const CostWeights w = testing::case1_weights(g);
  const CostBreakdown c = cost_breakdown(tr, w);
  CHECK(c.total() == doctest::Approx(c.running() + c.terminal()).epsilon(1e-15));
  CHECK(c.running() == doctest::Approx(c.running_u + c.running_v + c.running_control).epsilon(1e-15));
  const std::vector<double> series = running_cost_series(tr, w);
  double integral = 0.0;
  for (int n = 0; n <= tr.time_grid.n_steps(); ++n) integral += tr.time_grid.weight(n) * series[static_cast<std::size_t>(n)];
  CHECK(integral == doctest::Approx(c.running()).epsilon(1e-12));
}

TEST_CASE("total_cost is non-negative, quadratic and increasing in R") {
  const Grid1D g(40);
  const CostWeights w = testing::case1_weights(g);
  const Trajectory t1 = open_loop_run(g, 1.0);
  const Trajectory t3 = open_loop_run(g, -3.0);
  CHECK(total_cost(t1, w) >= 0.0);
  CHECK(total_cost(t3, w) == doctest::Approx(9.0 * total_cost(t1, w)).epsilon(1e-12));
  CostWeights heavier = w;
  heavier.R = 2.0;
  CHECK(total_cost(t1, heavier) > total_cost(t1, w));

  const TimeGrid tg = t1.time_grid;
  const Trajectory uncontrolled =
      simulate(t1.params, testing::sine(g), Field::zeros(g), FeedbackLaw::zero(), tg);
  CHECK(total_cost(uncontrolled, heavier) == total_cost(uncontrolled, w));
}

TEST_CASE("infinite R is allowed when the control vanishes") {
  const Grid1D g(20);
  const TimeGrid tg = TimeGrid::from_cfl(1.0, g.dx(), 1.0, 0.9);
  const Trajectory tr = simulate(testing::benchmark_params(g), testing::sine(g), Field::zeros(g), FeedbackLaw::zero(), tg);
  CostWeights w = testing::case1_weights(g);
  const double finite = total_cost(tr, w);
  w.R = std::numeric_limits<double>::infinity();
  CHECK(total_cost(tr, w) == finite);
}

TEST_CASE("weights validation") {
  const Grid1D g(20);
  CostWeights w = testing::case1_weights(g);
  CHECK_NOTHROW(w.validate());
  w.R = 0.0;
  CHECK_THROWS_AS(w.validate(), ContractViolation);
  w = testing::case1_weights(g);
  w.Q1 = sample_kernel([](double x, double y) { return x - y; }, g);
  CHECK_THROWS_WITH_AS(w.validate(), doctest::Contains("Q1"), ContractViolation);
  w = testing::case1_weights(g);
  w.Pf2 = testing::sine_product(Grid1D(10), 5.0);
  CHECK_THROWS_AS(w.validate(), ContractViolation);
}

TEST_CASE("minimum Rayleigh quotient of the benchmark kernels") {
  const Grid1D g(50);
  // Rank one and positive semidefinite: smallest eigenvalue is zero up to rounding.
  CHECK(std::abs(min_rayleigh_quotient(testing::sine_product(g, 10.0))) <= 1e-12);
  const Kernel2D negative = testing::sine_product(g, -2.0);
  CHECK(min_rayleigh_quotient(negative) == doctest::Approx(-2.0 * 0.5).epsilon(1e-3));
}
