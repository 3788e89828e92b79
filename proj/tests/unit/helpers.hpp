#pragma once

#include <cmath>

#include "hyperlqr/cost.hpp"
#include "hyperlqr/grid.hpp"
#include "hyperlqr/system.hpp"

namespace testing {

constexpr double kPi = 3.14159265358979323846;

inline hyperlqr::Field sine(const hyperlqr::Grid1D& g, double amplitude = 1.0) {
  return hyperlqr::Field::sample(g, [=](double x) { return amplitude * hyperlqr::sin_pi(x); });
}

inline hyperlqr::Kernel2D sine_product(const hyperlqr::Grid1D& g, double amplitude) {
  return hyperlqr::sample_kernel(
      [=](double x, double y) { return amplitude * hyperlqr::sin_pi(x) * hyperlqr::sin_pi(y); }, g);
}

// eps1 = eps2 = 1, c1 = 10, c2 = 20, q = 1.
inline hyperlqr::SystemParams benchmark_params(const hyperlqr::Grid1D& g) {
  return hyperlqr::SystemParams::constant(g, 1.0, 1.0, 10.0, 20.0, 1.0);
}

// Q1 = 10 s, Q2 = 20 s, Pf1 = s, Pf2 = 5 s with s = sin(pi x) sin(pi y); R = 1.
inline hyperlqr::CostWeights case1_weights(const hyperlqr::Grid1D& g) {
  return {sine_product(g, 10.0), sine_product(g, 20.0), sine_product(g, 1.0), sine_product(g, 5.0), 1.0};
}

inline hyperlqr::CostWeights zero_weights(const hyperlqr::Grid1D& g, double R = 1.0) {
  const auto z = hyperlqr::Kernel2D::zeros(g);
  return {z, z, z, z, R};
}

inline double rel_l2(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace testing
