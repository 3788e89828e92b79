#include "hyperlqr/backstepping.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "hyperlqr/errors.hpp"

namespace hyperlqr {

double bessel_i(int n, double x) {
  if (n < 0) throw ContractViolation("bessel_i: order must be non-negative");
  if (!(x >= 0.0)) throw ContractViolation("bessel_i: argument must be >= 0");
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;

  const double half = 0.5 * x;
  double term = 1.0;
  for (int k = 1; k <= n; ++k) term *= half / k;  // (x/2)^n / n!
  double sum = term;
  const double h2 = half * half;
  for (int m = 0; m < 10000; ++m) {
    term *= h2 / (static_cast<double>(m + 1) * static_cast<double>(m + 1 + n));
    sum += term;
    if (term < 1e-15 * sum) break;
  }
  return sum;
}

const char* to_string(GainSource source) {
  return source == GainSource::explicit_series ? "explicit_series" : "goursat_numeric";
}

BacksteppingGains explicit_gain_traces(const Grid1D& grid) {
  Eigen::VectorXd trace(grid.n_nodes());
  for (int j = 0; j < grid.n_nodes(); ++j) {
    const double y = grid.node(j);
    const double s = std::sqrt((1.0 - y) / (1.0 + y));
    const double z = 10.0 * s;
    trace[j] = -0.5 * (10.0 * bessel_i(0, z) + z * bessel_i(1, z));
  }
  return {grid, trace, trace, GainSource::explicit_series};
}

TriangularKernel::TriangularKernel(int n_nodes)
    : n_(n_nodes), data_(static_cast<std::size_t>(n_nodes) * static_cast<std::size_t>(n_nodes + 1) / 2, 0.0) {
  if (n_nodes < 2) throw ContractViolation("TriangularKernel: need at least two nodes");
}

double TriangularKernel::max_abs() const {
  double m = 0.0;
  for (double d : data_) m = std::max(m, std::abs(d));
  return m;
}

double TriangularKernel::max_abs_diff(const TriangularKernel& other) const {
  double m = 0.0;
  for (std::size_t k = 0; k < data_.size(); ++k) m = std::max(m, std::abs(data_[k] - other.data_[k]));
  return m;
}

double TriangularKernel::interpolate(double x, double y, double h) const {
  y = std::min(y, x);
  const int last_cell = n_ - 2;
  const int i = std::clamp(static_cast<int>(std::floor(x / h)), 0, last_cell);
  const int j = std::clamp(static_cast<int>(std::floor(y / h)), 0, i);
  const double a = x / h - i;
  double b = y / h - j;
  if (j == i && b > a) b = a;
  const auto& f = *this;
  if (a >= b) {
    return f(i, j) + a * (f(i + 1, j) - f(i, j)) + b * (f(i + 1, j + 1) - f(i + 1, j));
  }
  return f(i, j) + b * (f(i, j + 1) - f(i, j)) + a * (f(i + 1, j + 1) - f(i, j + 1));
}

BacksteppingGains GoursatKernels::traces() const {
  const int n = grid.n_nodes();
  Eigen::VectorXd kvu_row(n), kvv_row(n);
  for (int j = 0; j < n; ++j) {
    kvu_row[j] = kvu(n - 1, j);
    kvv_row[j] = kvv(n - 1, j);
  }
  return {grid, kvu_row, kvv_row, GainSource::goursat_numeric};
}

namespace {

double interp_field(const Eigen::VectorXd& f, double x, double h) {
  const auto last_cell = static_cast<int>(f.size()) - 2;
  const int i = std::clamp(static_cast<int>(std::floor(x / h)), 0, last_cell);
  const double a = std::clamp(x / h - i, 0.0, 1.0);
  return (1.0 - a) * f[i] + a * f[i + 1];
}

}  // namespace

GoursatKernels solve_goursat(const SystemParams& params, const Grid1D& grid, const GoursatOptions& opts) {
  params.validate();
  if (!(params.grid() == grid)) throw ContractViolation("solve_goursat: parameter grid differs");

  const int n = grid.n_nodes();
  const double h = grid.dx();
  const double e1 = params.eps1;
  const double e2 = params.eps2;
  const Eigen::VectorXd& c1 = params.c1.values;
  const Eigen::VectorXd& c2 = params.c2.values;
  const double edge_ratio = params.q * e1 / e2;

  GoursatKernels out{grid, TriangularKernel(n), TriangularKernel(n), 0, false, {}};
  TriangularKernel K(n), L(n);

  for (int it = 1; it <= opts.max_iter; ++it) {
    TriangularKernel Kn(n), Ln(n);

    // K^vu along (x - e2 s, y + e1 s) back to the diagonal.
    for (int i = 0; i < n; ++i) {
      const double x = grid.node(i);
      for (int j = 0; j <= i; ++j) {
        const double y = grid.node(j);
        const double s_end = (x - y) / (e1 + e2);
        const double xd = y + e1 * s_end;
        double value = -interp_field(c2, xd, h) / (e1 + e2);
        if (i > j) {
          const int m = i - j;
          const double ds = s_end / m;
          double acc = 0.0;
          for (int k = 0; k <= m; ++k) {
            const double s = k * ds;
            const double px = x - e2 * s;
            const double py = y + e1 * s;
            const double wk = (k == 0 || k == m) ? 0.5 : 1.0;
            acc += wk * interp_field(c2, py, h) * L.interpolate(px, py, h);
          }
          value += acc * ds;
        }
        Kn(i, j) = value;
      }
    }

    // K^vv along the unit diagonal (x - s, y - s) back to the edge y = 0.
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        double value = edge_ratio * Kn(i - j, 0);
        if (j > 0) {
          double acc = 0.0;
          for (int k = 0; k <= j; ++k) {
            const double wk = (k == 0 || k == j) ? 0.5 : 1.0;
            acc += wk * c1[j - k] * Kn(i - k, j - k);
          }
          value += acc * h / e2;
        }
        Ln(i, j) = value;
      }
    }

    const double change = std::max(Kn.max_abs_diff(K), Ln.max_abs_diff(L));
    const double scale = std::max({1.0, Kn.max_abs(), Ln.max_abs()});
    out.contraction_history.push_back(change);
    K = std::move(Kn);
    L = std::move(Ln);
    out.iterations = it;
    if (change <= opts.tol * scale) {
      out.converged = true;
      break;
    }
  }

  out.kvu = std::move(K);
  out.kvv = std::move(L);
  if (!out.converged) {
    std::ostringstream msg;
    msg << "solve_goursat: no convergence after " << opts.max_iter << " iterations; last changes:";
    const std::size_t tail = std::min<std::size_t>(5, out.contraction_history.size());
    for (std::size_t k = out.contraction_history.size() - tail; k < out.contraction_history.size(); ++k) {
      msg << ' ' << out.contraction_history[k];
    }
    throw NonConvergence(msg.str());
  }
  return out;
}

double backstepping_control_signal(const BacksteppingGains& gains, const Field& u, const Field& v) {
  if (!(gains.grid == u.grid) || !(gains.grid == v.grid)) {
    throw ContractViolation("backstepping_control_signal: grid mismatch");
  }
  return inner_product(Field(gains.grid, gains.kvu_trace), u) + inner_product(Field(gains.grid, gains.kvv_trace), v);
}

}  // namespace hyperlqr
