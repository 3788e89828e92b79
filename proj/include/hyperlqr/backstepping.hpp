#pragma once

#include <vector>

#include <Eigen/Dense>

#include "hyperlqr/grid.hpp"
#include "hyperlqr/system.hpp"

namespace hyperlqr {

/// Modified Bessel function of the first kind by its power series
///   I_n(x) = sum_m (x/2)^(n+2m) / (m! (m+n)!),
/// summed until a term drops below 1e-15 of the running sum.
/// Throws ContractViolation for x < 0 or n < 0.
double bessel_i(int n, double x);

enum class GainSource { explicit_series, goursat_numeric };

const char* to_string(GainSource source);

/// Boundary traces K^vu(1, y_j), K^vv(1, y_j) of the backstepping kernels.
struct BacksteppingGains {
  Grid1D grid;
  Eigen::VectorXd kvu_trace;
  Eigen::VectorXd kvv_trace;
  GainSource source;
};

/// The closed-form traces printed for the benchmark parameters
/// (eps1 = eps2 = 1, c1 = 10, c2 = 20, q = 1). Both traces use the same
/// expression
///   -1/2 { 10 I0(10 s) + 10 s I1(10 s) },  s = sqrt((1-y)/(1+y)).
/// Note these do not satisfy K^vu(1,1) = -c2/(eps1+eps2) = -10 (they give -5).
BacksteppingGains explicit_gain_traces(const Grid1D& grid);

/// Lower-triangular storage for kernels on {0 <= y_j <= x_i <= 1}.
class TriangularKernel {
 public:
  explicit TriangularKernel(int n_nodes);

  int n_nodes() const { return n_; }
  double& operator()(int i, int j) { return data_[index(i, j)]; }
  double operator()(int i, int j) const { return data_[index(i, j)]; }
  double max_abs() const;
  double max_abs_diff(const TriangularKernel& other) const;

  /// Piecewise-linear interpolation on the triangulated grid (each cell split
  /// along its main diagonal), so points with y <= x only touch stored nodes.
  double interpolate(double x, double y, double h) const;

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(i + 1) / 2 +
           static_cast<std::size_t>(j);
  }

  int n_;
  std::vector<double> data_;
};

struct GoursatKernels {
  Grid1D grid;
  TriangularKernel kvu;
  TriangularKernel kvv;
  int iterations;
  bool converged;
  std::vector<double> contraction_history;

  /// Row x = 1 of both kernels.
  BacksteppingGains traces() const;
};

struct GoursatOptions {
  /// Stop when the max-norm change between sweeps falls below
  /// tol * max(1, max|K|).
  double tol = 1e-10;
  int max_iter = 200;
};

/// Solves on the triangle 0 <= y <= x <= 1
///   eps2 K^vu_x - eps1 K^vu_y = c2(y) K^vv,
///   eps2 K^vv_x + eps2 K^vv_y = c1(y) K^vu,
///   K^vu(x,x) = -c2(x)/(eps1+eps2),  K^vv(x,0) = q eps1/eps2 K^vu(x,0)
/// by successive approximation of the integral equations along the
/// characteristics of each operator. Throws NonConvergence with the
/// contraction history when max_iter is exhausted.
GoursatKernels solve_goursat(const SystemParams& params, const Grid1D& grid,
                             const GoursatOptions& opts = {});

/// U = <K^vu(1,.), u> + <K^vv(1,.), v>.
double backstepping_control_signal(const BacksteppingGains& gains, const Field& u, const Field& v);

}  // namespace hyperlqr
