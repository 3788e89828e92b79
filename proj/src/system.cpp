#include "hyperlqr/system.hpp"

#include <cmath>

#include "hyperlqr/errors.hpp"

namespace hyperlqr {

SystemParams SystemParams::constant(const Grid1D& grid, double eps1, double eps2, double c1,
                                    double c2, double q) {
  SystemParams p{eps1, eps2, Field::constant(grid, c1), Field::constant(grid, c2), q};
  p.validate();
  return p;
}

void SystemParams::validate() const {
  if (!(eps1 > 0.0) || !std::isfinite(eps1)) throw ContractViolation("SystemParams: eps1 must be > 0");
  if (!(eps2 > 0.0) || !std::isfinite(eps2)) throw ContractViolation("SystemParams: eps2 must be > 0");
  if (q == 0.0 || !std::isfinite(q)) throw ContractViolation("SystemParams: q must be nonzero");
  if (!(c1.grid == c2.grid)) throw ContractViolation("SystemParams: c1 and c2 live on different grids");
  if (!c1.values.allFinite() || !c2.values.allFinite()) {
    throw ContractViolation("SystemParams: couplings must be finite");
  }
}

ControlSignal::ControlSignal(TimeGrid tg, Eigen::VectorXd v) : time_grid(tg), values(std::move(v)) {
  if (values.size() != time_grid.n_steps() + 1) {
    throw ContractViolation("ControlSignal: expected " + std::to_string(time_grid.n_steps() + 1) +
                            " values, got " + std::to_string(values.size()));
  }
}

ControlSignal ControlSignal::zeros(const TimeGrid& tg) {
  return {tg, Eigen::VectorXd::Zero(tg.n_steps() + 1)};
}

double time_inner_product(const ControlSignal& a, const ControlSignal& b) {
  if (!(a.time_grid == b.time_grid)) throw ContractViolation("time_inner_product: time grids differ");
  double s = 0.0;
  for (int n = 0; n <= a.time_grid.n_steps(); ++n) s += a.time_grid.weight(n) * a.values[n] * b.values[n];
  return s;
}

}  // namespace hyperlqr
