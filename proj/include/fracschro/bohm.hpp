#pragma once

// Polar decomposition psi = R exp(iS/hbar) and the fractional Bohmian fields
// built from it: quantum potential, momentum, velocity, force, energies.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "fracschro/errors.hpp"
#include "fracschro/fraccalc.hpp"
#include "fracschro/grid.hpp"
#include "fracschro/model.hpp"
#include "fracschro/observables.hpp"
#include "fracschro/special.hpp"

namespace fracschro {

struct BohmFields {
  RealGridFunction R;
  RealGridFunction S;  ///< hbar * unwrapped phase
  RealGridFunction Q_alpha;
  RealGridFunction p_alpha;
  RealGridFunction v_alpha;
  RealGridFunction F_alpha;
  RealGridFunction E_alpha;
  RealGridFunction K_alpha;
  std::vector<bool> node_mask;  ///< true where R < threshold
  std::vector<bool> field_mask; ///< node_mask widened by the cascade stencil; derived fields are zero here
  double threshold = 0.0;       ///< absolute node threshold on R
  double branch = 0.0;          ///< S at the first unmasked point, in (-pi hbar, pi hbar] before alignment
  double winding = 0.0;         ///< S gained around the ring, S(x + L) - S(x), for periodic grids
};

namespace detail {

inline double principal_arg(Complex z) {
  double a = std::arg(z);
  if (a <= -std::numbers::pi) a = std::numbers::pi;
  return a;
}

inline void zero_masked(RealGridFunction& f, const std::vector<bool>& mask) {
  for (std::size_t j = 0; j < f.size(); ++j)
    if (mask[j]) f[j] = 0.0;
}

// Points within `width` samples of a node (wrapping on periodic grids).
inline std::vector<bool> widen_mask(const std::vector<bool>& mask, std::size_t width, BoundaryMode mode) {
  const auto n = static_cast<std::ptrdiff_t>(mask.size());
  const auto w = static_cast<std::ptrdiff_t>(width);
  std::vector<bool> out(mask.size(), false);
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    if (!mask[static_cast<std::size_t>(j)]) continue;
    for (std::ptrdiff_t d = -w; d <= w; ++d) {
      std::ptrdiff_t i = j + d;
      if (mode == BoundaryMode::periodic)
        i = ((i % n) + n) % n;
      else if (i < 0 || i >= n)
        continue;
      out[static_cast<std::size_t>(i)] = true;
    }
  }
  return out;
}

}  // namespace detail

/// Half-width in samples of the deepest cascade stencil (4a).
inline constexpr std::size_t stencil_margin = 4;

/// R = |psi|, S = hbar * phase unwrapped left to right (adjacent jumps kept in
/// (-pi, pi]); across nodes S is held at its last unmasked value. The node
/// threshold is eps_rel * max R.
inline BohmFields decompose(const GridFunction& psi, double hbar, double eps_rel = 1e-6,
                            BoundaryMode mode = BoundaryMode::zero_extension) {
  if (!psi.all_finite()) throw ConfigError("decompose: non-finite input");
  const auto& g = psi.grid();
  BohmFields f;
  f.R = RealGridFunction(g);
  f.S = RealGridFunction(g);
  f.node_mask.assign(g.n, false);
  double rmax = 0.0;
  for (std::size_t j = 0; j < g.n; ++j) {
    f.R[j] = std::abs(psi[j]);
    rmax = std::max(rmax, f.R[j]);
  }
  if (rmax == 0.0) throw NodeError("decompose: wavefunction vanishes everywhere");
  f.threshold = eps_rel * rmax;

  std::optional<double> prev;
  std::size_t first = g.n;
  for (std::size_t j = 0; j < g.n; ++j) {
    if (f.R[j] < f.threshold) {
      f.node_mask[j] = true;
      continue;
    }
    double ph = detail::principal_arg(psi[j]);
    if (prev) {
      double d = ph - *prev;
      d -= 2.0 * std::numbers::pi * std::ceil((d - std::numbers::pi) / (2.0 * std::numbers::pi));
      ph = *prev + d;
    } else {
      first = j;
    }
    prev = ph;
    f.S[j] = hbar * ph;
  }
  if (first == g.n) throw NodeError("decompose: every grid point is a node");
  f.branch = f.S[first];
  double hold = f.S[first];
  for (std::size_t j = 0; j < g.n; ++j) {
    if (f.node_mask[j])
      f.S[j] = hold;
    else
      hold = f.S[j];
  }
  // continue from the last sample across the seam to x0 + L
  const double period = 2.0 * std::numbers::pi * hbar;
  double seam = f.S[0] - f.S[g.n - 1];
  seam -= period * std::ceil((seam - 0.5 * period) / period);
  f.winding = f.S[g.n - 1] + seam - f.S[0];
  f.field_mask = detail::widen_mask(f.node_mask, stencil_margin, mode);
  return f;
}

/// S^(a), taking the ring winding of S into account under periodic mode.
inline RealGridFunction phase_derivative(const BohmFields& f, FracOrder alpha, BoundaryMode mode) {
  return mrl_derivative(f.S, alpha, mode, 0, mode == BoundaryMode::periodic ? f.winding : 0.0);
}

/// decompose() for each frame, with each frame's 2 pi hbar branch aligned to the
/// previous frame at its amplitude maximum, so S is continuous in time.
inline std::vector<BohmFields> decompose_stack(const TimeStack& psi, double hbar, double eps_rel = 1e-6,
                                               BoundaryMode mode = BoundaryMode::zero_extension) {
  std::vector<BohmFields> out;
  out.reserve(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) {
    auto f = decompose(psi.frames[i], hbar, eps_rel, mode);
    if (!out.empty()) {
      const auto& prev = out.back();
      const auto jmax = static_cast<std::size_t>(
          std::distance(f.R.values().begin(), std::max_element(f.R.values().begin(), f.R.values().end())));
      const double period = 2.0 * std::numbers::pi * hbar;
      const double m = std::round((prev.S[jmax] - f.S[jmax]) / period);
      if (m != 0.0)
        for (auto& s : f.S.values()) s += m * period;
    }
    out.push_back(std::move(f));
  }
  return out;
}

inline RealTimeStack phase_stack(const std::vector<BohmFields>& fields, const std::vector<double>& times) {
  RealTimeStack s;
  for (std::size_t i = 0; i < fields.size(); ++i) s.push(times[i], fields[i].S);
  return s;
}

/// Q_a = -c2 (1/R) R^(2a) - c4 (1/R) [R^(4a) - (4/hbar^2) R S^(a) S^(3a)
///       - (12/hbar^2) R^(a) S^(a) S^(2a) - (3/hbar^2) R (S^(2a))^2 - (6/hbar^2) R^(2a) (S^(a))^2].
/// The (S^(a))^4 term of the real-part equation belongs to K_a. With
/// CurrentForm::as_printed the (S^(2a))^2 term carries R^2 instead of R.
inline RealGridFunction quantum_potential(const BohmFields& f, const PhysicalParams& prm, BoundaryMode mode,
                                          CurrentForm form = CurrentForm::consistent) {
  const FracOrder a = prm.alpha;
  const auto k = kinetic_coefficients(prm);
  const auto R1 = mrl_derivative(f.R, a, mode, 0);
  const auto R2 = mrl_derivative(R1, a, mode, 1);
  RealGridFunction Q(f.R.grid());
  for (std::size_t j = 0; j < Q.size(); ++j) Q[j] = -k.c2 * R2[j] / f.R[j];
  if (prm.include_relativistic) {
    const auto R4 = mrl_derivative(mrl_derivative(R2, a, mode, 0), a, mode, 1);
    const auto S1 = phase_derivative(f, a, mode);
    const auto S2 = mrl_derivative(S1, a, mode, 1);
    const auto S3 = mrl_derivative(S2, a, mode, 0);
    const double ih2 = 1.0 / (prm.hbar * prm.hbar);
    for (std::size_t j = 0; j < Q.size(); ++j) {
      const double R = f.R[j];
      const double rs = form == CurrentForm::consistent ? R : R * R;
      const double bracket = R4[j] - 4.0 * ih2 * R * S1[j] * S3[j] - 12.0 * ih2 * R1[j] * S1[j] * S2[j] -
                             3.0 * ih2 * rs * S2[j] * S2[j] - 6.0 * ih2 * R2[j] * S1[j] * S1[j];
      Q[j] -= k.c4 * bracket / R;
    }
  }
  detail::zero_masked(Q, f.field_mask);
  return Q;
}

/// p_a = hbar^(a-1) d^a S.
inline RealGridFunction momentum_field(const BohmFields& f, double hbar, FracOrder alpha, BoundaryMode mode) {
  auto p = phase_derivative(f, alpha, mode);
  p *= std::pow(hbar, alpha.value() - 1.0);
  return p;
}

/// lambda = (M c^a / c^b)^-1.
inline double velocity_scale(const PhysicalParams& prm) {
  return 1.0 / (prm.diffusion * std::pow(prm.c, prm.alpha.value()) / std::pow(prm.c, prm.beta.value()));
}

/// v_a = (dx/dt)^a = lambda p_a.
inline RealGridFunction velocity_field(const RealGridFunction& p_alpha, const PhysicalParams& prm) {
  auto v = p_alpha;
  v *= velocity_scale(prm);
  return v;
}

/// F_a = -d^a (Q_a + V).
inline RealGridFunction force_field(const RealGridFunction& Q, const RealGridFunction& V, FracOrder alpha,
                                    BoundaryMode mode, const std::vector<bool>* mask = nullptr) {
  auto F = mrl_derivative(Q + V, alpha, mode, 0);
  F *= -1.0;
  if (mask) detail::zero_masked(F, *mask);
  return F;
}

struct EnergyFields {
  RealGridFunction E_alpha;
  RealGridFunction K_alpha;
};

/// K = c2/hbar^2 (S^(a))^2 - c4/hbar^4 (S^(a))^4.
inline RealGridFunction kinetic_field(const BohmFields& f, const PhysicalParams& prm, BoundaryMode mode) {
  const auto k = kinetic_coefficients(prm);
  const auto S1 = phase_derivative(f, prm.alpha, mode);
  RealGridFunction K(f.S.grid());
  const double ih2 = 1.0 / (prm.hbar * prm.hbar);
  for (std::size_t j = 0; j < S1.size(); ++j) {
    const double s2 = S1[j] * S1[j];
    K[j] = k.c2 * ih2 * s2;
    if (prm.include_relativistic) K[j] -= k.c4 * ih2 * ih2 * s2 * s2;
  }
  return K;
}

/// E = -hbar^(b-1) d^b_t S at time level `level` of `S_history` (level >= 1),
/// and K from `f.S`.
inline EnergyFields energy_fields(const BohmFields& f, const RealTimeStack& S_history, std::size_t level,
                                  const PhysicalParams& prm, BoundaryMode mode) {
  if (S_history.size() < 2 || level == 0) throw HistoryError("energy: need at least two time levels of S");
  EnergyFields e{time_derivative(S_history, level, prm.beta), kinetic_field(f, prm, mode)};
  e.E_alpha *= -std::pow(prm.hbar, prm.beta.value() - 1.0);
  detail::zero_masked(e.E_alpha, f.field_mask);
  detail::zero_masked(e.K_alpha, f.field_mask);
  return e;
}

/// energy_fields at the newest level of `S_history`.
inline EnergyFields energy_fields(const BohmFields& f, const RealTimeStack& S_history, const PhysicalParams& prm,
                                  BoundaryMode mode) {
  return energy_fields(f, S_history, S_history.empty() ? 0 : S_history.size() - 1, prm, mode);
}

struct BalanceReport {
  RealGridFunction residual;  ///< E - K - Q - V, zero on nodes
  double interior_l2 = 0.0;
};

inline BalanceReport energy_balance_residual(const RealGridFunction& E, const RealGridFunction& K,
                                             const RealGridFunction& Q, const RealGridFunction& V,
                                             const std::vector<bool>* mask = nullptr) {
  BalanceReport b{E - K - Q - V, 0.0};
  if (mask) detail::zero_masked(b.residual, *mask);
  b.interior_l2 = l2_norm(b.residual, interior(b.residual.size()), mask);
  return b;
}

struct DeBroglie {
  double E = 0.0;
  double p = 0.0;
};

/// E_a = hbar^a Gamma(a+1) omega^a,  p_a = M Gamma(a+1) hbar^a k^a.
inline DeBroglie de_broglie(double k, double omega, const PhysicalParams& prm) {
  if (!(k >= 0.0) || !(omega >= 0.0)) throw ConfigError("de Broglie: k and omega must be nonnegative");
  const double a = prm.alpha.value();
  const double g = gamma_fn(a + 1.0);
  const double ha = std::pow(prm.hbar, a);
  return {ha * g * std::pow(omega, a), prm.diffusion * g * ha * std::pow(k, a)};
}

struct Trajectory {
  std::vector<double> times;
  std::vector<double> positions;
  double seeded_at = 0.0;
  bool exited = false;  ///< left [x0, x_last] before the end of the velocity stack
};

/// Integrates x_{n+1} = x_n + sign(v) |v|^(1/a) dt through a velocity stack,
/// interpolating v linearly in x and t.
inline Trajectory integrate_trajectory(const RealTimeStack& v, double seed, FracOrder alpha, double dt) {
  if (v.empty()) throw HistoryError("trajectory: empty velocity stack");
  if (!(dt > 0.0)) throw ConfigError("trajectory: dt must be positive");
  const auto& g = v.frames.front().grid();
  const double lo = g.x0;
  const double hi = g.last();
  if (!(seed >= lo && seed <= hi)) throw ConfigError("trajectory: seed outside the domain");

  auto sample = [&](std::size_t fi, double x) {
    const double u = (x - lo) / g.h;
    auto j = static_cast<std::size_t>(std::floor(u));
    if (j >= g.n - 1) j = g.n - 2;
    const double w = u - static_cast<double>(j);
    return (1.0 - w) * v.frames[fi][j] + w * v.frames[fi][j + 1];
  };
  auto velocity = [&](double t, double x) {
    if (v.size() == 1) return sample(0, x);
    const double t0 = v.times.front();
    const double span = v.times.back() - t0;
    const double u = std::clamp((t - t0) / span, 0.0, 1.0) * static_cast<double>(v.size() - 1);
    auto i = static_cast<std::size_t>(std::floor(u));
    if (i >= v.size() - 1) i = v.size() - 2;
    const double w = u - static_cast<double>(i);
    return (1.0 - w) * sample(i, x) + w * sample(i + 1, x);
  };

  Trajectory tr;
  tr.seeded_at = seed;
  const double t0 = v.times.front();
  const double t1 = v.times.back();
  const auto steps = static_cast<std::size_t>(std::llround((t1 - t0) / dt));
  double x = seed;
  tr.times.push_back(t0);
  tr.positions.push_back(x);
  const double inv = 1.0 / alpha.value();
  for (std::size_t n = 0; n < steps; ++n) {
    const double t = t0 + static_cast<double>(n) * dt;
    const double vel = velocity(t, x);
    const double xn = x + std::copysign(std::pow(std::abs(vel), inv), vel) * dt;
    if (!(xn >= lo && xn <= hi)) {
      tr.exited = true;
      break;
    }
    x = xn;
    tr.times.push_back(t0 + static_cast<double>(n + 1) * dt);
    tr.positions.push_back(x);
  }
  return tr;
}

namespace detail {

inline void fill_fields(BohmFields& f, const RealTimeStack& phase,
                        std::size_t level, const PhysicalParams& prm, BoundaryMode mode, CurrentForm form) {
  f.Q_alpha = quantum_potential(f, prm, mode, form);
  f.p_alpha = momentum_field(f, prm.hbar, prm.alpha, mode);
  f.v_alpha = velocity_field(f.p_alpha, prm);
  f.F_alpha = force_field(f.Q_alpha, prm.potential, prm.alpha, mode, &f.field_mask);
  if (level >= 1) {
    auto e = energy_fields(f, phase, level, prm, mode);
    f.E_alpha = std::move(e.E_alpha);
    f.K_alpha = std::move(e.K_alpha);
  } else {
    // no time history for E at the first level
    f.K_alpha = kinetic_field(f, prm, mode);
    zero_masked(f.K_alpha, f.field_mask);
    f.E_alpha = RealGridFunction(f.S.grid(), std::vector<double>(f.S.size(), std::nan("")));
  }
}

}  // namespace detail

/// Bohmian fields of every frame of `psi`, with S continuous in time. E is NaN
/// on the first frame.
inline std::vector<BohmFields> bohm_series(const TimeStack& psi, const PhysicalParams& prm, BoundaryMode mode,
                                           double eps_rel = 1e-6, CurrentForm form = CurrentForm::consistent) {
  auto series = decompose_stack(psi, prm.hbar, eps_rel, mode);
  const auto phase = phase_stack(series, psi.times);
  for (std::size_t i = 0; i < series.size(); ++i) detail::fill_fields(series[i], phase, i, prm, mode, form);
  return series;
}

/// All Bohmian fields of the newest frame of `psi`, with S continuous in time.
inline BohmFields bohm_analysis(const TimeStack& psi, const PhysicalParams& prm, BoundaryMode mode,
                                double eps_rel = 1e-6, CurrentForm form = CurrentForm::consistent) {
  auto series = decompose_stack(psi, prm.hbar, eps_rel, mode);
  const auto phase = phase_stack(series, psi.times);
  BohmFields f = series.back();
  detail::fill_fields(f, phase, series.size() - 1, prm, mode, form);
  return f;
}

}  // namespace fracschro
