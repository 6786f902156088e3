#pragma once

// Time integration of i hbar^b d^b_t psi = L psi, with L the operator of
// schrodinger_rhs.
//
//   integer_cn     (b = 1)  Crank-Nicolson on the assembled L.
//   frac_explicit  (b <= 1) Grunwald-Letnikov history sum on psi(t) - psi(0),
//                           solved explicitly for the newest level.

#include <cmath>
#include <complex>
#include <cstddef>
#include <deque>
#include <memory>
#include <numbers>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "fracschro/errors.hpp"
#include "fracschro/fraccalc.hpp"
#include "fracschro/grid.hpp"
#include "fracschro/model.hpp"

namespace fracschro {

enum class Scheme { integer_cn, frac_explicit };

/// forward: i hbar^b d^b_t psi = L psi.  conjugate: -i hbar^b d^b_t psi = L psi.
enum class TimeSense { forward, conjugate };

inline const char* to_string(Scheme s) { return s == Scheme::integer_cn ? "integer_cn" : "frac_explicit"; }

struct RunConfig {
  double t_final = 0.0;
  double dt = 1e-3;
  std::size_t snapshot_stride = 1;
  std::size_t memory_truncation = 0;  ///< 0 keeps the full history
  Scheme scheme = Scheme::integer_cn;
  BoundaryMode mode = BoundaryMode::periodic;
  TimeSense sense = TimeSense::forward;

  /// Number of steps; t_final must be an integer multiple of dt.
  std::size_t steps() const {
    const double r = t_final / dt;
    const double n = std::round(r);
    if (std::abs(r - n) > 1e-9 * std::max(1.0, n)) throw ConfigError("t_final must be an integer multiple of dt");
    return static_cast<std::size_t>(n);
  }

  void validate(const PhysicalParams& prm) const {
    if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw ConfigError("t_final must be nonnegative");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
    if (snapshot_stride < 1) throw ConfigError("snapshot_stride must be >= 1");
    if (scheme == Scheme::integer_cn && !prm.beta.is_integer())
      throw ConfigError("scheme integer_cn requires beta = 1 (use frac_explicit)");
    (void)steps();
  }
};

struct EvolutionState {
  double t = 0.0;
  std::size_t step = 0;
  double dt = 0.0;
  GridFunction psi;
  GridFunction psi0;
  std::deque<GridFunction> history;  ///< prior levels, newest at the back
  double initial_max = 0.0;
};

/// Imaginary-axis extent of the stability region of the explicit
/// Grunwald-Letnikov scheme of order beta: the boundary locus
/// z(t) = (1 - e^{-it})^beta e^{it} first crosses Re z = 0 at |z| = Y(beta).
inline double explicit_imaginary_extent(FracOrder beta) {
  if (beta.is_integer()) return 0.0;
  const double b = beta.value();
  auto locus = [b](double th) {
    return std::pow(Complex(1.0, 0.0) - std::exp(Complex(0.0, -th)), b) * std::exp(Complex(0.0, th));
  };
  double lo = 1e-12;
  double hi = std::numbers::pi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (locus(mid).real() > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return std::abs(locus(0.5 * (lo + hi)).imag());
}

/// Largest admissible dt^b rho(L) / hbar^b for frac_explicit.
inline double explicit_stability_limit(FracOrder beta) {
  if (beta.is_integer()) return 0.5;
  return std::min(0.5, 0.9 * explicit_imaginary_extent(beta));
}

/// Spectral radius estimate of a sparse operator by power iteration.
inline double spectral_bound(const Eigen::SparseMatrix<double>& L, int iterations = 200) {
  const Eigen::Index n = L.rows();
  const Eigen::SparseMatrix<Complex> Lc = L.cast<Complex>();
  Eigen::VectorXcd v(n);
  // deterministic start vector touching every Fourier mode
  for (Eigen::Index j = 0; j < n; ++j)
    v[j] = Complex(std::cos(0.7 * static_cast<double>(j * j)), std::sin(1.3 * static_cast<double>(j)));
  v.normalize();
  double est = 0.0;
  for (int i = 0; i < iterations; ++i) {
    Eigen::VectorXcd w = Lc * v;
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    est = nw;
    v = w / nw;
  }
  return est;
}

/// Advances EvolutionState by one step; holds the assembled operator and,
/// for integer_cn, the factorised implicit system.
class Propagator {
 public:
  Propagator(const Grid1D& grid, const PhysicalParams& prm, const RunConfig& cfg)
      : grid_(grid), prm_(prm), cfg_(cfg) {
    prm_.validate();
    prm_.require_grid(grid_);
    cfg_.validate(prm_);
    L_ = hamiltonian_matrix(grid_, prm_, cfg_.mode);
    const double sign = cfg_.sense == TimeSense::forward ? 1.0 : -1.0;
    if (cfg_.scheme == Scheme::integer_cn) {
      const Complex f(0.0, sign * 0.5 * cfg_.dt / prm_.hbar);
      Eigen::SparseMatrix<Complex> I(L_.rows(), L_.cols());
      I.setIdentity();
      const Eigen::SparseMatrix<Complex> Lc = L_.cast<Complex>();
      Eigen::SparseMatrix<Complex> A = I + f * Lc;
      rhs_ = I - f * Lc;
      const auto n = static_cast<double>(grid_.n);
      if (static_cast<double>(A.nonZeros()) > 0.25 * n * n) {
        dense_lu_ = std::make_unique<Eigen::PartialPivLU<Eigen::MatrixXcd>>(Eigen::MatrixXcd(A));
      } else {
        A.makeCompressed();
        sparse_lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<Complex>>>();
        sparse_lu_->analyzePattern(A);
        sparse_lu_->factorize(A);
        if (sparse_lu_->info() != Eigen::Success) throw InstabilityError(0, "Crank-Nicolson factorisation failed");
      }
    } else {
      Lc_ = L_.cast<Complex>();
      explicit_factor_ = Complex(0.0, -sign) * std::pow(cfg_.dt, prm_.beta.value()) /
                         std::pow(prm_.hbar, prm_.beta.value());
      stability_number_ = std::pow(cfg_.dt, prm_.beta.value()) * spectral_bound(L_) /
                          std::pow(prm_.hbar, prm_.beta.value());
      stability_limit_ = explicit_stability_limit(prm_.beta);
    }
  }

  const RunConfig& config() const { return cfg_; }
  const Eigen::SparseMatrix<double>& operator_matrix() const { return L_; }

  /// dt^b rho(L) / hbar^b (frac_explicit only; 0 otherwise).
  double stability_number() const { return stability_number_; }
  double stability_limit() const { return stability_limit_; }

  EvolutionState initial_state(const GridFunction& psi0) const {
    if (!(psi0.grid() == grid_)) throw ConfigError("initial state is sampled on a different grid");
    if (!psi0.all_finite()) throw ConfigError("initial state must be finite");
    EvolutionState s;
    s.dt = cfg_.dt;
    s.psi = psi0;
    s.psi0 = psi0;
    s.history.push_back(psi0);
    s.initial_max = max_abs(psi0);
    return s;
  }

  /// One step. Throws InstabilityError naming the (1-based) step index.
  void advance(EvolutionState& s) {
    const std::size_t next = s.step + 1;
    if (cfg_.scheme == Scheme::frac_explicit && stability_number_ >= stability_limit_) {
      throw InstabilityError(next, "dt^beta * rho(L) / hbar^beta = " + std::to_string(stability_number_) +
                                       " exceeds the explicit stability limit " +
                                       std::to_string(stability_limit_));
    }
    GridFunction out(grid_);
    if (cfg_.scheme == Scheme::integer_cn)
      cn_step(s.psi, out);
    else
      explicit_step(s, out);

    const double m = max_abs(out);
    if (!out.all_finite() || (s.initial_max > 0.0 && m > 1e6 * s.initial_max))
      throw InstabilityError(next, "max|psi| grew beyond 1e6 x its initial value");

    s.psi = std::move(out);
    s.step = next;
    s.t = static_cast<double>(next) * cfg_.dt;
    if (cfg_.scheme == Scheme::integer_cn) {
      s.history.clear();  // no memory
    } else if (cfg_.memory_truncation > 0 && s.history.size() >= cfg_.memory_truncation) {
      s.history.pop_front();
    }
    s.history.push_back(s.psi);
  }

 private:
  void cn_step(const GridFunction& psi, GridFunction& out) const {
    const Eigen::Index n = static_cast<Eigen::Index>(grid_.n);
    Eigen::Map<const Eigen::VectorXcd> v(psi.values().data(), n);
    Eigen::VectorXcd b = rhs_ * v;
    Eigen::VectorXcd x = dense_lu_ ? Eigen::VectorXcd(dense_lu_->solve(b)) : Eigen::VectorXcd(sparse_lu_->solve(b));
    for (Eigen::Index j = 0; j < n; ++j) out[static_cast<std::size_t>(j)] = x[j];
  }

  void explicit_step(const EvolutionState& s, GridFunction& out) {
    // history holds psi^{n-1} ... psi^{n-K}, newest at the back
    const std::size_t K = s.history.size();
    if (weights_.size() < K + 1) weights_ = gl_weights(prm_.beta, 2 * (K + 1));
    const std::size_t n = grid_.n;
    const auto& psi0 = s.psi0.values();
    for (std::size_t j = 0; j < n; ++j) out[j] = psi0[j];
    for (std::size_t k = 1; k <= K; ++k) {
      const double w = weights_[k];
      if (w == 0.0) continue;
      const auto& prev = s.history[K - k].values();
      for (std::size_t j = 0; j < n; ++j) out[j] -= w * (prev[j] - psi0[j]);
    }
    Eigen::Map<const Eigen::VectorXcd> last(s.history.back().values().data(), static_cast<Eigen::Index>(n));
    Eigen::VectorXcd Lpsi = Lc_ * last;
    for (std::size_t j = 0; j < n; ++j) out[j] += explicit_factor_ * Lpsi[static_cast<Eigen::Index>(j)];
  }

  Grid1D grid_;
  PhysicalParams prm_;
  RunConfig cfg_;
  Eigen::SparseMatrix<double> L_;
  Eigen::SparseMatrix<Complex> Lc_;
  Eigen::SparseMatrix<Complex> rhs_;
  std::unique_ptr<Eigen::PartialPivLU<Eigen::MatrixXcd>> dense_lu_;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<Complex>>> sparse_lu_;
  Complex explicit_factor_{};
  double stability_number_ = 0.0;
  double stability_limit_ = 0.0;
  std::vector<double> weights_;
};

/// Single step with a freshly assembled propagator. Loops should hold a
/// Propagator instead.
inline EvolutionState step(const EvolutionState& state, const PhysicalParams& prm, const RunConfig& cfg) {
  Propagator p(state.psi.grid(), prm, cfg);
  EvolutionState next = state;
  p.advance(next);
  return next;
}

/// Evolves `initial` to cfg.t_final; returns snapshots at every
/// cfg.snapshot_stride steps, starting with t = 0.
inline TimeStack evolve(const GridFunction& initial, const PhysicalParams& prm, const RunConfig& cfg) {
  Propagator prop(initial.grid(), prm, cfg);
  const std::size_t n_steps = cfg.steps();
  auto state = prop.initial_state(initial);
  TimeStack out;
  out.push(0.0, state.psi);
  for (std::size_t i = 0; i < n_steps; ++i) {
    prop.advance(state);
    if (state.step % cfg.snapshot_stride == 0) out.push(state.t, state.psi);
  }
  return out;
}

}  // namespace fracschro
