#pragma once

#include <functional>

#include <Eigen/Dense>

namespace hyperlqr {

/// Uniform node-centred grid on [0,1] with nodes x_j = j/n_cells, both
/// endpoints included.
class Grid1D {
 public:
  explicit Grid1D(int n_cells);

  int n_cells() const { return n_cells_; }
  int n_nodes() const { return n_cells_ + 1; }
  double dx() const { return dx_; }
  double node(int j) const;
  Eigen::VectorXd nodes() const;

  /// Composite trapezoid weights: dx in the interior, dx/2 at both ends.
  Eigen::VectorXd trapezoid_weights() const;

  bool operator==(const Grid1D& other) const { return n_cells_ == other.n_cells_; }

 private:
  int n_cells_;
  double dx_;
};

/// Uniform time grid t_n = n*dt on [0, t_final].
class TimeGrid {
 public:
  TimeGrid(double t_final, int n_steps);

  /// Smallest step count with dt * max_speed / dx <= cfl.
  static TimeGrid from_cfl(double t_final, double dx, double max_speed, double cfl);

  double t_final() const { return t_final_; }
  int n_steps() const { return n_steps_; }
  double dt() const { return dt_; }
  double time(int n) const;
  /// Trapezoid quadrature weight of node n in time.
  double weight(int n) const;

  bool operator==(const TimeGrid& other) const {
    return n_steps_ == other.n_steps_ && t_final_ == other.t_final_;
  }

 private:
  double t_final_;
  int n_steps_;
  double dt_;
};

struct Field {
  Grid1D grid;
  Eigen::VectorXd values;

  Field(Grid1D g, Eigen::VectorXd v);

  static Field zeros(const Grid1D& grid);
  static Field constant(const Grid1D& grid, double value);
  static Field sample(const Grid1D& grid, const std::function<double(double)>& fn);
};

/// Dense kernel on the node set, values(i, j) = K(x_i, y_j).
struct Kernel2D {
  Grid1D grid;
  Eigen::MatrixXd values;

  Kernel2D(Grid1D g, Eigen::MatrixXd v);

  static Kernel2D zeros(const Grid1D& grid);
};

/// Trapezoid approximation of int_0^1 f g dx.
double inner_product(const Field& f, const Field& g);

/// A(f)(x_i) = int_0^1 A(x_i, y) f(y) dy by trapezoid quadrature in y.
Field apply_operator(const Kernel2D& A, const Field& f);

Kernel2D sample_kernel(const std::function<double(double, double)>& fn, const Grid1D& grid);

/// sqrt(<f, f>)
double l2_norm(const Field& f);

/// sin(pi x), exactly zero at integer x.
double sin_pi(double x);

namespace detail {

// Raw-vector versions used inside the time-stepping loops.
double trapezoid_dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double dx);
Eigen::VectorXd apply_kernel(const Eigen::MatrixXd& K, const Eigen::VectorXd& f, double dx);

}  // namespace detail

}  // namespace hyperlqr
