#pragma once

// Analytic fields and refinement helpers shared by the test suites.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "fracschro/grid.hpp"

namespace fracschro::testing {

/// Free Gaussian packet of the integer Schrodinger equation (hbar = m = 1),
/// initial width sigma, carrier k, centred at x0.
inline Complex free_gaussian(double x, double t, double sigma, double k, double x0 = 0.0) {
  const Complex st = 1.0 + Complex(0.0, t / (2.0 * sigma * sigma));
  const double d = x - x0;
  const Complex env = std::exp(-(d - k * t) * (d - k * t) / (4.0 * sigma * sigma * st));
  return std::pow(2.0 * std::numbers::pi * sigma * sigma, -0.25) / std::sqrt(st) * env *
         std::exp(Complex(0.0, k * d - 0.5 * k * k * t));
}

inline GridFunction sample_gaussian(const Grid1D& g, double t, double sigma, double k, double x0 = 0.0) {
  GridFunction f(g);
  for (std::size_t j = 0; j < g.n; ++j) f[j] = free_gaussian(g.x(j), t, sigma, k, x0);
  return f;
}

inline GridFunction plane_wave(const Grid1D& g, double k, double omega = 0.0, double t = 0.0) {
  GridFunction f(g);
  for (std::size_t j = 0; j < g.n; ++j) f[j] = std::exp(Complex(0.0, k * g.x(j) - omega * t));
  return f;
}

template <typename F>
RealGridFunction sample_real(const Grid1D& g, F&& fn) {
  RealGridFunction f(g);
  for (std::size_t j = 0; j < g.n; ++j) f[j] = fn(g.x(j));
  return f;
}

/// Observed orders log2(e_i / e_{i+1}) for a sequence of errors at halved spacing.
inline std::vector<double> observed_orders(const std::vector<double>& errors) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) out.push_back(std::log2(errors[i] / errors[i + 1]));
  return out;
}

}  // namespace fracschro::testing
