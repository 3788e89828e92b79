#include "hyperlqr/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hyperlqr/errors.hpp"

namespace hyperlqr {

Grid1D::Grid1D(int n_cells) : n_cells_(n_cells), dx_(0.0) {
  if (n_cells < 1) {
    throw ContractViolation("Grid1D: n_cells must be positive, got " + std::to_string(n_cells));
  }
  dx_ = 1.0 / static_cast<double>(n_cells);
}

double Grid1D::node(int j) const {
  return static_cast<double>(j) / static_cast<double>(n_cells_);
}

Eigen::VectorXd Grid1D::nodes() const {
  Eigen::VectorXd x(n_nodes());
  for (int j = 0; j < n_nodes(); ++j) x[j] = node(j);
  return x;
}

Eigen::VectorXd Grid1D::trapezoid_weights() const {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n_nodes(), dx_);
  w[0] = 0.5 * dx_;
  w[n_cells_] = 0.5 * dx_;
  return w;
}

TimeGrid::TimeGrid(double t_final, int n_steps) : t_final_(t_final), n_steps_(n_steps), dt_(0.0) {
  if (!(t_final > 0.0) || !std::isfinite(t_final)) {
    throw ContractViolation("TimeGrid: t_final must be positive and finite");
  }
  if (n_steps < 1) {
    throw ContractViolation("TimeGrid: n_steps must be positive, got " + std::to_string(n_steps));
  }
  dt_ = t_final / static_cast<double>(n_steps);
}

TimeGrid TimeGrid::from_cfl(double t_final, double dx, double max_speed, double cfl) {
  if (!(cfl > 0.0) || cfl > 1.0) throw ContractViolation("TimeGrid: cfl must lie in (0, 1]");
  if (!(max_speed > 0.0)) throw ContractViolation("TimeGrid: max_speed must be positive");
  const double dt_max = cfl * dx / max_speed;
  // The small slack keeps exact multiples (e.g. T/dt_max == 112) from rounding up.
  const auto n = static_cast<int>(std::ceil(t_final / dt_max - 1e-9));
  return TimeGrid(t_final, n < 1 ? 1 : n);
}

double TimeGrid::time(int n) const {
  if (n == n_steps_) return t_final_;
  return static_cast<double>(n) * dt_;
}

double TimeGrid::weight(int n) const {
  if (n < 0 || n > n_steps_) throw ContractViolation("TimeGrid: step index out of range");
  return (n == 0 || n == n_steps_) ? 0.5 * dt_ : dt_;
}

Field::Field(Grid1D g, Eigen::VectorXd v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.n_nodes()) {
    throw ContractViolation("Field: value count " + std::to_string(values.size()) +
                            " does not match node count " + std::to_string(grid.n_nodes()));
  }
}

Field Field::zeros(const Grid1D& grid) { return {grid, Eigen::VectorXd::Zero(grid.n_nodes())}; }

Field Field::constant(const Grid1D& grid, double value) {
  return {grid, Eigen::VectorXd::Constant(grid.n_nodes(), value)};
}

Field Field::sample(const Grid1D& grid, const std::function<double(double)>& fn) {
  Eigen::VectorXd v(grid.n_nodes());
  for (int j = 0; j < grid.n_nodes(); ++j) v[j] = fn(grid.node(j));
  return {grid, std::move(v)};
}

Kernel2D::Kernel2D(Grid1D g, Eigen::MatrixXd v) : grid(g), values(std::move(v)) {
  if (values.rows() != grid.n_nodes() || values.cols() != grid.n_nodes()) {
    throw ContractViolation("Kernel2D: shape does not match node count " +
                            std::to_string(grid.n_nodes()));
  }
}

Kernel2D Kernel2D::zeros(const Grid1D& grid) {
  return {grid, Eigen::MatrixXd::Zero(grid.n_nodes(), grid.n_nodes())};
}

namespace detail {

double trapezoid_dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double dx) {
  const Eigen::Index n = a.size();
  double interior = 0.0;
  for (Eigen::Index i = 1; i + 1 < n; ++i) interior += a[i] * b[i];
  return dx * (interior + 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]));
}

Eigen::VectorXd apply_kernel(const Eigen::MatrixXd& K, const Eigen::VectorXd& f, double dx) {
  Eigen::VectorXd wf = f;
  wf[0] *= 0.5;
  wf[wf.size() - 1] *= 0.5;
  return dx * (K * wf);
}

}  // namespace detail

double inner_product(const Field& f, const Field& g) {
  if (!(f.grid == g.grid)) throw ContractViolation("inner_product: fields live on different grids");
  return detail::trapezoid_dot(f.values, g.values, f.grid.dx());
}

Field apply_operator(const Kernel2D& A, const Field& f) {
  if (!(A.grid == f.grid)) throw ContractViolation("apply_operator: kernel and field grids differ");
  return {f.grid, detail::apply_kernel(A.values, f.values, f.grid.dx())};
}

Kernel2D sample_kernel(const std::function<double(double, double)>& fn, const Grid1D& grid) {
  const int n = grid.n_nodes();
  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) K(i, j) = fn(grid.node(i), grid.node(j));
  }
  return {grid, std::move(K)};
}

double l2_norm(const Field& f) { return std::sqrt(std::max(0.0, inner_product(f, f))); }

double sin_pi(double x) {
  // Reduce to r in (-1, 1] with sin(pi x) = sin(pi r), then fold onto [-1/2, 1/2].
  double r = std::fmod(x, 2.0);
  if (r > 1.0) r -= 2.0;
  if (r <= -1.0) r += 2.0;
  if (r > 0.5) r = 1.0 - r;
  if (r < -0.5) r = -1.0 - r;
  return std::sin(3.14159265358979323846 * r);
}

}  // namespace hyperlqr
