#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "fracschro/errors.hpp"

namespace fracschro {

namespace detail {

// Lanczos coefficients, g = 7, nine terms.
inline constexpr double lanczos_g = 7.0;
inline constexpr std::array<double, 9> lanczos_coef = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

inline double lanczos_gamma(double x) {
  if (x < 0.5) {
    // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
    return std::numbers::pi / (std::sin(std::numbers::pi * x) * lanczos_gamma(1.0 - x));
  }
  x -= 1.0;
  double a = lanczos_coef[0];
  const double t = x + lanczos_g + 0.5;
  for (std::size_t i = 1; i < lanczos_coef.size(); ++i) a += lanczos_coef[i] / (x + static_cast<double>(i));
  return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, x + 0.5) * std::exp(-t) * a;
}

}  // namespace detail

/// Gamma function. Positive integers up to 171 return the exact factorial;
/// everything else goes through the Lanczos sum (relative error ~1e-15 on (0, 6]).
/// Throws DomainError at the poles x = 0, -1, -2, ...
inline double gamma_fn(double x) {
  if (!std::isfinite(x)) throw DomainError("gamma: non-finite argument");
  if (x <= 0.0 && x == std::floor(x)) throw DomainError("gamma: pole at nonpositive integer");
  if (x >= 1.0 && x <= 171.0 && x == std::floor(x)) {
    double f = 1.0;
    for (double k = 2.0; k < x; k += 1.0) f *= k;
    return f;
  }
  return detail::lanczos_gamma(x);
}

}  // namespace fracschro
