#pragma once

#include <cmath>
#include <utility>

#include <Eigen/SparseCore>

#include "fracschro/errors.hpp"
#include "fracschro/fraccalc.hpp"
#include "fracschro/grid.hpp"

namespace fracschro {

/// Physical scales, fractional orders and the sampled potential.
/// Code units default to hbar = m = c = M = 1.
struct PhysicalParams {
  double hbar = 1.0;
  double mass = 1.0;
  double c = 1.0;
  double diffusion = 1.0;  ///< M_{x,alpha}
  FracOrder alpha{1.0};    ///< spatial order
  FracOrder beta{1.0};     ///< temporal order
  RealGridFunction potential;
  bool include_relativistic = false;

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive and finite");
    };
    positive(hbar, "hbar");
    positive(mass, "mass");
    positive(c, "c");
    positive(diffusion, "M_x_alpha");
    if (!potential.all_finite()) throw ConfigError("potential must be finite");
  }

  void require_grid(const Grid1D& g) const {
    if (!(potential.grid() == g)) throw ConfigError("potential is sampled on a different grid");
  }
};

/// Default parameters with a zero potential on `grid`.
inline PhysicalParams unit_params(const Grid1D& grid, double alpha = 1.0, double beta = 1.0,
                                  bool relativistic = false) {
  PhysicalParams p;
  p.alpha = FracOrder(alpha);
  p.beta = FracOrder(beta);
  p.potential = RealGridFunction(grid);
  p.include_relativistic = relativistic;
  return p;
}

/// E_beta = sqrt(|p|^(2a) c^(2a) + m^(2b) c^(4b)).
inline double relativistic_energy(double p, const PhysicalParams& prm) {
  const double a = prm.alpha.value();
  const double b = prm.beta.value();
  return std::sqrt(std::pow(std::abs(p), 2.0 * a) * std::pow(prm.c, 2.0 * a) +
                   std::pow(prm.mass, 2.0 * b) * std::pow(prm.c, 4.0 * b));
}

struct DispersionExpansion {
  double value = 1.0;
  bool out_of_range = false;  ///< |x| >= 1: the truncated series is not meaningful
};

/// Second-order Maclaurin truncation of sqrt(1 + x): 1 + x/2 - x^2/8.
inline DispersionExpansion expand_dispersion(double x) {
  return {1.0 + 0.5 * x - 0.125 * x * x, !(std::abs(x) < 1.0)};
}

struct KineticCoefficients {
  double c2 = 0.5;    ///< prefactor of the 2a-cascade
  double c4 = 0.125;  ///< prefactor of the 4a-cascade
};

inline KineticCoefficients kinetic_coefficients(const PhysicalParams& prm) {
  const double a = prm.alpha.value();
  const double b = prm.beta.value();
  const double M = prm.diffusion;
  KineticCoefficients k;
  k.c2 = M * M * std::pow(prm.hbar, 2.0 * a) / (2.0 * std::pow(prm.mass, b)) * std::pow(prm.c, 2.0 * a) /
         std::pow(prm.c, 2.0 * b);
  k.c4 = 0.125 * std::pow(M, 4.0) * std::pow(prm.hbar, 4.0 * a) / std::pow(prm.mass, 3.0 * b) *
         std::pow(prm.c, 4.0 * a) / std::pow(prm.c, 6.0 * b);
  return k;
}

/// [-c2 d^{2a} - c4 d^{4a} + V] psi, the right-hand side of i hbar^b d^b_t psi = RHS.
inline GridFunction schrodinger_rhs(const GridFunction& psi, const PhysicalParams& prm, BoundaryMode mode) {
  prm.require_grid(psi.grid());
  const auto k = kinetic_coefficients(prm);
  const auto d2 = sequential_derivative(psi, prm.alpha, 2, mode);
  GridFunction out(psi.grid());
  for (std::size_t j = 0; j < psi.size(); ++j) out[j] = -k.c2 * d2[j] + prm.potential[j] * psi[j];
  if (prm.include_relativistic) {
    const auto d4 = mrl_derivative(mrl_derivative(d2, prm.alpha, mode, 0), prm.alpha, mode, 1);
    for (std::size_t j = 0; j < psi.size(); ++j) out[j] -= k.c4 * d4[j];
  }
  return out;
}

/// Real matrix L with L psi == schrodinger_rhs(psi).
inline Eigen::SparseMatrix<double> hamiltonian_matrix(const Grid1D& grid, const PhysicalParams& prm,
                                                      BoundaryMode mode) {
  prm.require_grid(grid);
  const auto k = kinetic_coefficients(prm);
  const auto d2 = sequential_matrix(grid, prm.alpha, 2, mode);
  Eigen::SparseMatrix<double> L = -k.c2 * d2;
  if (prm.include_relativistic) {
    Eigen::SparseMatrix<double> d4 = d2 * d2;
    L -= k.c4 * d4;
  }
  Eigen::SparseMatrix<double> v(L.rows(), L.cols());
  v.reserve(Eigen::VectorXi::Constant(L.cols(), 1));
  for (std::size_t j = 0; j < grid.n; ++j)
    v.insert(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = prm.potential[j];
  L += v;
  L.prune(0.0);
  return L;
}

/// Pointwise residual of the fractional Klein-Gordon equation at the newest
/// frame of `history`:
///   c^{-2b} d^{2b}_t psi - M^2 d^{2a}_x psi + (m^{2b} c^{2b} / hbar^{2b}) psi.
inline GridFunction klein_gordon_residual(const TimeStack& history, const PhysicalParams& prm,
                                          BoundaryMode mode) {
  if (history.size() < 3) throw HistoryError("Klein-Gordon residual needs at least three time levels");
  const std::size_t level = history.size() - 1;
  const auto& psi = history.frames[level];
  const double b2 = 2.0 * prm.beta.value();
  const auto dtt = sequential_time_derivative(history, level, prm.beta, 2);
  const auto dxx = sequential_derivative(psi, prm.alpha, 2, mode);
  const double mass_term = std::pow(prm.mass, b2) * std::pow(prm.c, b2) / std::pow(prm.hbar, b2);
  const double inv_c = std::pow(prm.c, -b2);
  const double M2 = prm.diffusion * prm.diffusion;
  GridFunction out(psi.grid());
  for (std::size_t j = 0; j < psi.size(); ++j) out[j] = inv_c * dtt[j] - M2 * dxx[j] + mass_term * psi[j];
  return out;
}

}  // namespace fracschro
