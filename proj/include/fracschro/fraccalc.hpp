#pragma once

// Discrete modified Riemann-Liouville (MRL) derivatives.
//
// A single operator of order alpha in (0, 1] is realised as a Grunwald-Letnikov
// history sum over the samples at and to the left of each point, applied to the
// field minus its reference value so constants are annihilated. Higher orders
// (2a, 3a, 4a) only exist as cascades of the single operator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/SparseCore>

#include "fracschro/errors.hpp"
#include "fracschro/grid.hpp"
#include "fracschro/special.hpp"

namespace fracschro {

/// Fractional order in (0, 1].
class FracOrder {
 public:
  constexpr FracOrder() = default;
  explicit FracOrder(double v) : value_(v) {
    if (!(v > 0.0 && v <= 1.0)) throw ConfigError("fractional order must lie in (0, 1]");
  }
  constexpr double value() const { return value_; }
  constexpr bool is_integer() const { return value_ == 1.0; }

 private:
  double value_ = 1.0;
};

/// Grunwald-Letnikov weights w_0 = 1, w_k = w_{k-1} (k - 1 - alpha) / k.
inline std::vector<double> gl_weights(FracOrder alpha, std::size_t count) {
  std::vector<double> w(count, 0.0);
  if (count == 0) return w;
  w[0] = 1.0;
  for (std::size_t k = 1; k < count; ++k)
    w[k] = w[k - 1] * (static_cast<double>(k) - 1.0 - alpha.value()) / static_cast<double>(k);
  return w;
}

/// Closed-form MRL power rule D^a x^g = Gamma(g+1) / Gamma(g+1-a) x^(g-a).
inline double mrl_power_derivative(double gamma, FracOrder alpha, double x) {
  if (!(gamma > 0.0)) throw DomainError("power rule: exponent must be positive");
  if (x < 0.0) throw DomainError("power rule: x must be nonnegative");
  const double shifted = gamma + 1.0 - alpha.value();
  if (shifted <= 0.0 && shifted == std::floor(shifted))
    throw DomainError("power rule: Gamma(g+1-a) at a pole");
  const double expo = gamma - alpha.value();
  if (x == 0.0 && expo < 0.0) throw DomainError("power rule: singular at x = 0");
  return gamma_fn(gamma + 1.0) / gamma_fn(shifted) * std::pow(x, expo);
}

/// MRL derivative of a constant.
inline double mrl_constant_derivative(FracOrder /*alpha*/) { return 0.0; }

namespace detail {

// Number of weights that can be nonzero for a history of length n.
inline std::size_t active_weights(FracOrder alpha, std::size_t n) {
  return alpha.is_integer() ? std::min<std::size_t>(2, n) : n;
}

template <typename T>
void require_finite(const BasicGridFunction<T>& f) {
  if (!f.all_finite()) throw ConfigError("mrl derivative: non-finite input");
  if (f.size() < 4) throw ConfigError("mrl derivative: need at least 4 samples");
}

}  // namespace detail

/// Discrete MRL derivative of order alpha.
///
/// `shift` = 1 evaluates the history sum one grid point ahead (shifted
/// Grunwald form); the cascade uses it on every second stage so that the
/// composed even orders are centred.
///
/// zero_extension: the field is continued to the left by its value at x0 (the
/// MRL lower terminal), and to the right by its last value when shifted.
/// periodic: the sum wraps over exactly one period and acts on the
/// mean-subtracted field (for alpha = 1 the two weights already sum to zero).
/// A nonzero `winding` W treats f as quasi-periodic, f(x + L) = f(x) + W
/// (an unwrapped phase on a ring).
template <typename T>
BasicGridFunction<T> mrl_derivative(const BasicGridFunction<T>& f, FracOrder alpha, BoundaryMode mode,
                                    int shift = 0, double winding = 0.0) {
  detail::require_finite(f);
  const std::size_t n = f.size();
  const double scale = std::pow(f.grid().h, -alpha.value());
  const auto s = static_cast<std::ptrdiff_t>(shift);
  BasicGridFunction<T> out(f.grid());

  if (mode == BoundaryMode::periodic) {
    const std::size_t m = detail::active_weights(alpha, n);
    const auto w = gl_weights(alpha, m);
    std::vector<T> g(f.values());
    if (!alpha.is_integer()) {
      T mean = std::accumulate(g.begin(), g.end(), T{}) / static_cast<double>(n);
      for (auto& v : g) v -= mean;
    }
    const auto nn = static_cast<std::ptrdiff_t>(n);
    for (std::ptrdiff_t j = 0; j < nn; ++j) {
      T acc{};
      for (std::size_t k = 0; k < m; ++k) {
        const std::ptrdiff_t raw = j + s - static_cast<std::ptrdiff_t>(k);
        std::ptrdiff_t idx = raw % nn;
        if (idx < 0) idx += nn;
        acc += w[k] * g[static_cast<std::size_t>(idx)];
        if (winding != 0.0 && raw != idx) acc += w[k] * (static_cast<double>((raw - idx) / nn) * winding);
      }
      out[static_cast<std::size_t>(j)] = scale * acc;
    }
    return out;
  }

  const std::size_t m = detail::active_weights(alpha, n + 1);
  const auto w = gl_weights(alpha, m);
  const T ref = f[0];
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  for (std::ptrdiff_t j = 0; j <= last; ++j) {
    T acc{};
    const std::ptrdiff_t top = j + s;
    const auto kmax = std::min<std::ptrdiff_t>(top, static_cast<std::ptrdiff_t>(m) - 1);
    for (std::ptrdiff_t k = 0; k <= kmax; ++k) {
      const std::ptrdiff_t idx = std::min(top - k, last);
      acc += w[static_cast<std::size_t>(k)] * (f[static_cast<std::size_t>(idx)] - ref);
    }
    out[static_cast<std::size_t>(j)] = scale * acc;
  }
  return out;
}

/// Miller-Ross sequential derivative: `depth` successive single-order
/// applications (depth in 1..4). Stage i uses shift i % 2.
template <typename T>
BasicGridFunction<T> sequential_derivative(const BasicGridFunction<T>& f, FracOrder alpha, int depth,
                                           BoundaryMode mode) {
  if (depth < 1 || depth > 4) throw ConfigError("sequential derivative: depth must be 1..4");
  BasicGridFunction<T> g = mrl_derivative(f, alpha, mode, 0);
  for (int i = 1; i < depth; ++i) g = mrl_derivative(g, alpha, mode, i % 2);
  return g;
}

/// Matrix of the single-stage operator, so that D * f == mrl_derivative(f).
inline Eigen::SparseMatrix<double> derivative_matrix(const Grid1D& grid, FracOrder alpha, BoundaryMode mode,
                                                     int shift = 0) {
  const std::size_t n = grid.n;
  const double scale = std::pow(grid.h, -alpha.value());
  std::vector<Eigen::Triplet<double>> trips;
  const auto nn = static_cast<std::ptrdiff_t>(n);
  const auto s = static_cast<std::ptrdiff_t>(shift);

  if (mode == BoundaryMode::periodic) {
    const std::size_t m = detail::active_weights(alpha, n);
    const auto w = gl_weights(alpha, m);
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
    const bool dense = !alpha.is_integer();
    trips.reserve(dense ? n * n : n * m);
    for (std::ptrdiff_t j = 0; j < nn; ++j) {
      if (dense) {
        // mean subtraction: every column loses wsum / n
        for (std::ptrdiff_t c = 0; c < nn; ++c) trips.emplace_back(j, c, -scale * wsum / static_cast<double>(n));
      }
      for (std::size_t k = 0; k < m; ++k) {
        std::ptrdiff_t idx = (j + s - static_cast<std::ptrdiff_t>(k)) % nn;
        if (idx < 0) idx += nn;
        trips.emplace_back(j, idx, scale * w[k]);
      }
    }
  } else {
    const std::size_t m = detail::active_weights(alpha, n + 1);
    const auto w = gl_weights(alpha, m);
    for (std::ptrdiff_t j = 0; j < nn; ++j) {
      const std::ptrdiff_t top = j + s;
      const auto kmax = std::min<std::ptrdiff_t>(top, static_cast<std::ptrdiff_t>(m) - 1);
      for (std::ptrdiff_t k = 0; k <= kmax; ++k) {
        const std::ptrdiff_t idx = std::min(top - k, nn - 1);
        trips.emplace_back(j, idx, scale * w[static_cast<std::size_t>(k)]);
        trips.emplace_back(j, 0, -scale * w[static_cast<std::size_t>(k)]);
      }
    }
  }
  Eigen::SparseMatrix<double> d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  d.setFromTriplets(trips.begin(), trips.end());
  d.prune(0.0);
  return d;
}

/// Matrix of sequential_derivative(., alpha, depth, mode).
inline Eigen::SparseMatrix<double> sequential_matrix(const Grid1D& grid, FracOrder alpha, int depth,
                                                     BoundaryMode mode) {
  if (depth < 1 || depth > 4) throw ConfigError("sequential derivative: depth must be 1..4");
  const auto d0 = derivative_matrix(grid, alpha, mode, 0);
  const auto d1 = derivative_matrix(grid, alpha, mode, 1);
  Eigen::SparseMatrix<double> acc = d0;
  for (int i = 1; i < depth; ++i) acc = ((i % 2) ? d1 : d0) * acc;
  return acc;
}

// ---------------------------------------------------------------------------
// Temporal derivatives over a stored history

enum class TimeRule {
  plain,            ///< Grunwald-Letnikov sum only
  start_corrected,  ///< plus one starting weight: exact on a + b t^beta
};

/// Starting weight c_n = Gamma(beta+1) - sum_k w_k (n-k)^beta.
inline double start_weight(FracOrder beta, std::size_t level, const std::vector<double>& w) {
  double g = 0.0;
  for (std::size_t k = 0; k <= level; ++k)
    g += w[k] * std::pow(static_cast<double>(level - k), beta.value());
  return gamma_fn(beta.value() + 1.0) - g;
}

/// MRL time derivative at time level `level` of a uniformly spaced history
/// (frame 0 is the lower terminal). Uses frames 0..level, plus frame 1 for the
/// starting weight.
template <typename T>
BasicGridFunction<T> time_derivative(const BasicTimeStack<T>& stack, std::size_t level, FracOrder beta,
                                     TimeRule rule = TimeRule::start_corrected) {
  if (level >= stack.size()) throw HistoryError("time derivative: level beyond stored history");
  const double dt = stack.spacing();
  const std::size_t m = beta.is_integer() ? std::min<std::size_t>(2, level + 1) : level + 1;
  const auto w = gl_weights(beta, std::max<std::size_t>(m, level + 1));
  const auto& y0 = stack.frames[0];
  const double scale = std::pow(dt, -beta.value());
  BasicGridFunction<T> out(y0.grid());
  for (std::size_t k = 0; k < m; ++k) {
    const auto& yk = stack.frames[level - k];
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += w[k] * (yk[j] - y0[j]);
  }
  if (rule == TimeRule::start_corrected) {
    const double c = start_weight(beta, level, w);
    if (c != 0.0) {
      const auto& y1 = stack.frames[1];
      for (std::size_t j = 0; j < out.size(); ++j) out[j] += c * (y1[j] - y0[j]);
    }
  }
  out *= scale;
  return out;
}

/// Sequential time derivative of order depth*beta at `level` (depth 1 or 2).
template <typename T>
BasicGridFunction<T> sequential_time_derivative(const BasicTimeStack<T>& stack, std::size_t level,
                                                FracOrder beta, int depth,
                                                TimeRule rule = TimeRule::start_corrected) {
  if (depth == 1) return time_derivative(stack, level, beta, rule);
  if (depth != 2) throw ConfigError("sequential time derivative: depth must be 1 or 2");
  if (level < 2) throw HistoryError("second-order time cascade needs three time levels");
  BasicTimeStack<T> first;
  for (std::size_t i = 0; i <= level; ++i) first.push(stack.times[i], time_derivative(stack, i, beta, rule));
  return time_derivative(first, level, beta, rule);
}

// ---------------------------------------------------------------------------
// Rule checks (test harness, not used by the solver)

/// Outer map f(u) with its integer derivative and its MRL derivative of
/// order alpha taken with respect to u (lower terminal u = 0).
struct OuterMap {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::function<double(double, FracOrder)> frac_derivative;
};

/// f(u) = u^p, p > 0.
inline OuterMap power_map(double p) {
  return {[p](double u) { return std::pow(u, p); },
          [p](double u) { return p * std::pow(u, p - 1.0); },
          [p](double u, FracOrder a) { return mrl_power_derivative(p, a, u); }};
}

enum class ChainVariant {
  nondiff_outer,   ///< d^a f[u] = (d^a f / du^a) (du/dx)^a
  coarse_grained,  ///< d^a f[u] = (df/du) d^a u
};

/// Pointwise residual LHS - RHS of the selected chain rule, with all x-derivatives
/// taken by the discrete operators under zero extension.
inline RealGridFunction chain_rule_check(const OuterMap& f, const RealGridFunction& u, FracOrder alpha,
                                         ChainVariant variant) {
  RealGridFunction fu(u.grid());
  for (std::size_t j = 0; j < u.size(); ++j) fu[j] = f.value(u[j]);
  auto lhs = mrl_derivative(fu, alpha, BoundaryMode::zero_extension);
  RealGridFunction rhs(u.grid());
  if (variant == ChainVariant::nondiff_outer) {
    const auto du = mrl_derivative(u, FracOrder(1.0), BoundaryMode::zero_extension);
    for (std::size_t j = 0; j < u.size(); ++j) {
      const double d = du[j];
      const double root = std::copysign(std::pow(std::abs(d), alpha.value()), d);
      rhs[j] = f.frac_derivative(u[j], alpha) * root;
    }
  } else {
    const auto dau = mrl_derivative(u, alpha, BoundaryMode::zero_extension);
    for (std::size_t j = 0; j < u.size(); ++j) rhs[j] = f.derivative(u[j]) * dau[j];
  }
  return lhs - rhs;
}

/// Pointwise residual (uv)^(a) - u^(a) v - u v^(a).
template <typename T>
BasicGridFunction<T> leibniz_residual(const BasicGridFunction<T>& u, const BasicGridFunction<T>& v,
                                      FracOrder alpha, BoundaryMode mode) {
  BasicGridFunction<T> uv(u.grid());
  for (std::size_t j = 0; j < u.size(); ++j) uv[j] = u[j] * v[j];
  auto out = mrl_derivative(uv, alpha, mode);
  const auto du = mrl_derivative(u, alpha, mode);
  const auto dv = mrl_derivative(v, alpha, mode);
  for (std::size_t j = 0; j < u.size(); ++j) out[j] -= du[j] * v[j] + u[j] * dv[j];
  return out;
}

}  // namespace fracschro
