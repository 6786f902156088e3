#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fracschro/errors.hpp"

namespace fracschro {

using Complex = std::complex<double>;

/// Uniform 1-D grid x_j = x0 + j*h, j = 0..n-1.
struct Grid1D {
  double x0 = 0.0;
  double h = 1.0;
  std::size_t n = 4;

  Grid1D() = default;
  Grid1D(double origin, double spacing, std::size_t count) : x0(origin), h(spacing), n(count) {
    if (!(spacing > 0.0) || !std::isfinite(spacing) || !std::isfinite(origin))
      throw ConfigError("grid: spacing must be positive and finite");
    if (count < 4) throw ConfigError("grid: need at least 4 samples");
  }

  /// Grid with n samples covering [a, b] inclusive of both ends.
  static Grid1D closed(double a, double b, std::size_t count) {
    return Grid1D(a, (b - a) / static_cast<double>(count - 1), count);
  }

  /// Periodic grid of period (b - a): n samples, right end excluded.
  static Grid1D periodic(double a, double b, std::size_t count) {
    return Grid1D(a, (b - a) / static_cast<double>(count), count);
  }

  double x(std::size_t j) const { return x0 + static_cast<double>(j) * h; }
  double last() const { return x(n - 1); }

  bool operator==(const Grid1D&) const = default;
};

enum class BoundaryMode { periodic, zero_extension };

inline const char* to_string(BoundaryMode m) {
  return m == BoundaryMode::periodic ? "periodic" : "zero_extension";
}

/// Samples of a field on a Grid1D. Real fields (R, S, rho, V) use T = double.
template <typename T>
class BasicGridFunction {
 public:
  using value_type = T;

  BasicGridFunction() = default;
  explicit BasicGridFunction(Grid1D g) : grid_(g), values_(g.n, T{}) {}
  BasicGridFunction(Grid1D g, std::vector<T> v) : grid_(g), values_(std::move(v)) {
    if (values_.size() != grid_.n) throw ConfigError("grid function: size does not match grid");
  }

  template <typename F>
  static BasicGridFunction sample(Grid1D g, F&& f) {
    BasicGridFunction out(g);
    for (std::size_t j = 0; j < g.n; ++j) out.values_[j] = static_cast<T>(f(g.x(j)));
    return out;
  }

  const Grid1D& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  T& operator[](std::size_t j) { return values_[j]; }
  const T& operator[](std::size_t j) const { return values_[j]; }

  std::vector<T>& values() { return values_; }
  const std::vector<T>& values() const { return values_; }
  std::span<const T> view() const { return values_; }

  bool all_finite() const {
    for (const auto& v : values_) {
      if constexpr (std::is_same_v<T, Complex>) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
      } else {
        if (!std::isfinite(v)) return false;
      }
    }
    return true;
  }

  BasicGridFunction& operator+=(const BasicGridFunction& o) {
    for (std::size_t j = 0; j < size(); ++j) values_[j] += o.values_[j];
    return *this;
  }
  BasicGridFunction& operator-=(const BasicGridFunction& o) {
    for (std::size_t j = 0; j < size(); ++j) values_[j] -= o.values_[j];
    return *this;
  }
  template <typename S>
  BasicGridFunction& operator*=(S s) {
    for (auto& v : values_) v *= s;
    return *this;
  }

  friend BasicGridFunction operator+(BasicGridFunction a, const BasicGridFunction& b) { return a += b; }
  friend BasicGridFunction operator-(BasicGridFunction a, const BasicGridFunction& b) { return a -= b; }
  template <typename S>
  friend BasicGridFunction operator*(S s, BasicGridFunction a) {
    return a *= s;
  }

 private:
  Grid1D grid_{};
  std::vector<T> values_;
};

using GridFunction = BasicGridFunction<Complex>;
using RealGridFunction = BasicGridFunction<double>;

inline RealGridFunction real_part(const GridFunction& f) {
  RealGridFunction out(f.grid());
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = f[j].real();
  return out;
}

inline GridFunction to_complex(const RealGridFunction& f) {
  GridFunction out(f.grid());
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = f[j];
  return out;
}

inline GridFunction conj(const GridFunction& f) {
  GridFunction out(f.grid());
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = std::conj(f[j]);
  return out;
}

/// Index range [first, last) of the innermost `fraction` of the grid.
struct IndexRange {
  std::size_t first = 0;
  std::size_t last = 0;
};

inline IndexRange interior(std::size_t n, double fraction = 0.8) {
  const auto cut = static_cast<std::size_t>(std::floor(0.5 * (1.0 - fraction) * static_cast<double>(n)));
  return {cut, n - cut};
}

template <typename T>
double abs_value(const T& v) {
  return std::abs(v);
}

/// Discrete L2 norm sqrt(sum |f|^2 h) over [r.first, r.last), skipping masked points if a mask is given.
template <typename T>
double l2_norm(const BasicGridFunction<T>& f, IndexRange r, const std::vector<bool>* mask = nullptr) {
  double s = 0.0;
  for (std::size_t j = r.first; j < r.last; ++j) {
    if (mask && (*mask)[j]) continue;
    const double a = abs_value(f[j]);
    s += a * a;
  }
  return std::sqrt(s * f.grid().h);
}

template <typename T>
double l2_norm(const BasicGridFunction<T>& f) {
  return l2_norm(f, IndexRange{0, f.size()});
}

template <typename T>
double max_abs(const BasicGridFunction<T>& f, IndexRange r) {
  double m = 0.0;
  for (std::size_t j = r.first; j < r.last; ++j) m = std::max(m, abs_value(f[j]));
  return m;
}

template <typename T>
double max_abs(const BasicGridFunction<T>& f) {
  return max_abs(f, IndexRange{0, f.size()});
}

/// Snapshots of a field at uniformly spaced times.
template <typename T>
struct BasicTimeStack {
  std::vector<double> times;
  std::vector<BasicGridFunction<T>> frames;

  std::size_t size() const { return frames.size(); }
  bool empty() const { return frames.empty(); }

  void push(double t, BasicGridFunction<T> f) {
    times.push_back(t);
    frames.push_back(std::move(f));
  }

  /// Spacing between consecutive frames; throws HistoryError if fewer than two
  /// frames or if the spacing is not uniform.
  double spacing() const {
    if (times.size() < 2) throw HistoryError("time stack: need at least two frames");
    const double dt = times[1] - times[0];
    if (!(dt > 0.0)) throw HistoryError("time stack: times must increase");
    for (std::size_t i = 2; i < times.size(); ++i) {
      const double d = times[i] - times[i - 1];
      if (std::abs(d - dt) > 1e-9 * std::max(1.0, std::abs(dt)) + 1e-12 * std::abs(times[i]))
        throw HistoryError("time stack: frames are not uniformly spaced");
    }
    return dt;
  }
};

using TimeStack = BasicTimeStack<Complex>;
using RealTimeStack = BasicTimeStack<double>;

}  // namespace fracschro
