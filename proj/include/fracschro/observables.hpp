#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "fracschro/errors.hpp"
#include "fracschro/fraccalc.hpp"
#include "fracschro/grid.hpp"
#include "fracschro/model.hpp"

namespace fracschro {

/// Which relativistic correction is used for the current (and, in bohm.hpp,
/// for the quantum-potential bracket).
///   consistent  the correction obtained by multiplying the equation by psi*
///               and subtracting its conjugate, generalised with cascades:
///               c4/(i hbar^b) [psi* psi^(3a) - psi psi*^(3a) - psi*^(a) psi^(2a) + psi^(a) psi*^(2a)]
///   as_printed  c4/(i hbar^b) d^a { J' - 2 psi*^(a) psi^(a) + 4 psi^(a) psi*^(2a) }
enum class CurrentForm { consistent, as_printed };

inline RealGridFunction probability_density(const GridFunction& psi) {
  RealGridFunction rho(psi.grid());
  for (std::size_t j = 0; j < psi.size(); ++j) rho[j] = std::norm(psi[j]);
  return rho;
}

struct CurrentDensity {
  GridFunction j_prime;  ///< psi* d^a psi - psi d^a psi*
  GridFunction j;
};

/// Current from precomputed derivatives d1 = psi^(a), d2 = psi^(2a),
/// d3 = psi^(3a) (consistent form).
inline GridFunction current_from_derivatives(const GridFunction& psi, const GridFunction& d1,
                                             const GridFunction& d2, const GridFunction& d3,
                                             const PhysicalParams& prm) {
  const auto k = kinetic_coefficients(prm);
  const Complex pre = 1.0 / (Complex(0.0, 1.0) * std::pow(prm.hbar, prm.beta.value()));
  GridFunction j(psi.grid());
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const Complex p = psi[i];
    const Complex jp = std::conj(p) * d1[i] - p * std::conj(d1[i]);
    Complex acc = k.c2 * jp;
    if (prm.include_relativistic) {
      const Complex b = std::conj(p) * d3[i] - p * std::conj(d3[i]) - std::conj(d1[i]) * d2[i] +
                        d1[i] * std::conj(d2[i]);
      acc += k.c4 * b;
    }
    j[i] = pre * acc;
  }
  return j;
}

inline CurrentDensity current_density(const GridFunction& psi, const PhysicalParams& prm, BoundaryMode mode,
                                      CurrentForm form = CurrentForm::consistent) {
  const FracOrder a = prm.alpha;
  const auto d1 = mrl_derivative(psi, a, mode, 0);
  CurrentDensity out{GridFunction(psi.grid()), GridFunction(psi.grid())};
  for (std::size_t i = 0; i < psi.size(); ++i)
    out.j_prime[i] = std::conj(psi[i]) * d1[i] - psi[i] * std::conj(d1[i]);

  if (!prm.include_relativistic) {
    out.j = current_from_derivatives(psi, d1, d1, d1, prm);
    return out;
  }
  const auto d2 = mrl_derivative(d1, a, mode, 1);
  if (form == CurrentForm::consistent) {
    const auto d3 = mrl_derivative(d2, a, mode, 0);
    out.j = current_from_derivatives(psi, d1, d2, d3, prm);
    return out;
  }

  const auto k = kinetic_coefficients(prm);
  const Complex pre = 1.0 / (Complex(0.0, 1.0) * std::pow(prm.hbar, prm.beta.value()));
  GridFunction bracket(psi.grid());
  for (std::size_t i = 0; i < psi.size(); ++i)
    bracket[i] = out.j_prime[i] - 2.0 * std::conj(d1[i]) * d1[i] + 4.0 * d1[i] * std::conj(d2[i]);
  const auto dbracket = mrl_derivative(bracket, a, mode, 0);
  for (std::size_t i = 0; i < psi.size(); ++i)
    out.j[i] = pre * (k.c2 * out.j_prime[i] + k.c4 * dbracket[i]);
  return out;
}

struct ContinuityReport {
  RealGridFunction rho;
  RealGridFunction rho_dt;  ///< d^b_t rho
  GridFunction j_prime;
  GridFunction j;
  GridFunction dj_dx;     ///< d^a_x J
  GridFunction residual;  ///< d^b_t rho + d^a_x J
  double interior_residual_l2 = 0.0;
  double total_probability = 0.0;
};

inline RealTimeStack density_stack(const TimeStack& psi) {
  RealTimeStack out;
  for (std::size_t i = 0; i < psi.size(); ++i) out.push(psi.times[i], probability_density(psi.frames[i]));
  return out;
}

/// Continuity residual at time level `level`, given the wavefunction stack and
/// its density stack (density_stack(psi)).
inline ContinuityReport continuity_at(const TimeStack& psi, const RealTimeStack& rho, std::size_t level,
                                      const PhysicalParams& prm, BoundaryMode mode,
                                      CurrentForm form = CurrentForm::consistent) {
  if (psi.size() < 2) throw HistoryError("continuity residual needs at least two snapshots");
  if (level >= psi.size()) throw HistoryError("continuity residual: level beyond stored snapshots");
  ContinuityReport r;
  r.rho = rho.frames[level];
  r.rho_dt = time_derivative(rho, level, prm.beta);
  auto cur = current_density(psi.frames[level], prm, mode, form);
  r.j_prime = std::move(cur.j_prime);
  r.j = std::move(cur.j);
  r.dj_dx = mrl_derivative(r.j, prm.alpha, mode, 0);
  r.residual = GridFunction(r.rho.grid());
  for (std::size_t i = 0; i < r.rho.size(); ++i) r.residual[i] = r.rho_dt[i] + r.dj_dx[i];
  r.interior_residual_l2 = l2_norm(r.residual, interior(r.rho.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < r.rho.size(); ++i) total += r.rho[i];
  r.total_probability = total * r.rho.grid().h;
  return r;
}

/// Continuity residual at the newest snapshot.
inline ContinuityReport continuity_residual(const TimeStack& psi, const PhysicalParams& prm, BoundaryMode mode,
                                            CurrentForm form = CurrentForm::consistent) {
  if (psi.size() < 2) throw HistoryError("continuity residual needs at least two snapshots");
  return continuity_at(psi, density_stack(psi), psi.size() - 1, prm, mode, form);
}

}  // namespace fracschro
