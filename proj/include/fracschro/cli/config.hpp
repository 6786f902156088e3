#pragma once

// Experiment configuration: a line-oriented `key = value` file with
// [section] headers. Parsing is strict: unknown sections or keys, duplicate
// keys and out-of-range values are rejected with a message naming the key.
//
//   [grid]         x0, h, n, boundary (periodic | zero_extension)
//   [physics]      hbar, mass, c, M_x_alpha, alpha, beta, relativistic,
//                  potential (zero | harmonic | linear), potential_strength
//   [initial]      type (plane_wave | gaussian | from_file), k, center, width, path
//   [run]          t_final, dt, snapshot_stride, memory_truncation,
//                  scheme (integer_cn | frac_explicit)
//   [output]       dir
//   [diagnostics]  continuity, bohm, kg_residual, trajectories (comma list),
//                  eps_R, current_form (consistent | as_printed)
//
// The sections [manifest] and [summary] written by the tool are accepted and
// ignored, so a run manifest is itself a valid config.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fracschro/errors.hpp"
#include "fracschro/evolver.hpp"
#include "fracschro/grid.hpp"
#include "fracschro/model.hpp"
#include "fracschro/observables.hpp"

namespace fracschro::cli {

enum class InitialKind { plane_wave, gaussian, from_file };
enum class PotentialKind { zero, harmonic, linear };

inline const char* to_string(InitialKind k) {
  switch (k) {
    case InitialKind::plane_wave: return "plane_wave";
    case InitialKind::gaussian: return "gaussian";
    default: return "from_file";
  }
}

inline const char* to_string(PotentialKind k) {
  switch (k) {
    case PotentialKind::zero: return "zero";
    case PotentialKind::harmonic: return "harmonic";
    default: return "linear";
  }
}

inline const char* to_string(CurrentForm f) { return f == CurrentForm::consistent ? "consistent" : "as_printed"; }

struct ExperimentConfig {
  // grid
  double x0 = 0.0;
  double h = 0.1;
  std::size_t n = 64;
  BoundaryMode boundary = BoundaryMode::periodic;
  // physics
  double hbar = 1.0;
  double mass = 1.0;
  double c = 1.0;
  double diffusion = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
  bool relativistic = false;
  PotentialKind potential = PotentialKind::zero;
  double potential_strength = 1.0;  ///< harmonic: V = s x^2 / 2, linear: V = s x
  // initial
  InitialKind initial = InitialKind::gaussian;
  double k = 0.0;
  double center = 0.0;
  double width = 1.0;
  std::string path;
  // run
  double t_final = 0.0;
  double dt = 1e-3;
  std::size_t snapshot_stride = 1;
  std::size_t memory_truncation = 0;
  Scheme scheme = Scheme::integer_cn;
  // output
  std::string output_dir = "run";
  // diagnostics
  bool continuity = true;
  bool bohm = true;
  bool kg_residual = false;
  std::vector<double> trajectories;
  double eps_R = 1e-6;
  CurrentForm current_form = CurrentForm::consistent;

  /// Directory of the config file; relative input paths resolve against it.
  std::filesystem::path base_dir;

  Grid1D grid() const { return Grid1D(x0, h, n); }

  PhysicalParams physics() const {
    const Grid1D g = grid();
    PhysicalParams p = unit_params(g, alpha, beta, relativistic);
    p.hbar = hbar;
    p.mass = mass;
    p.c = c;
    p.diffusion = diffusion;
    for (std::size_t j = 0; j < g.n; ++j) {
      const double x = g.x(j);
      switch (potential) {
        case PotentialKind::zero: break;
        case PotentialKind::harmonic: p.potential[j] = 0.5 * potential_strength * x * x; break;
        case PotentialKind::linear: p.potential[j] = potential_strength * x; break;
      }
    }
    return p;
  }

  RunConfig run() const {
    RunConfig r;
    r.t_final = t_final;
    r.dt = dt;
    r.snapshot_stride = snapshot_stride;
    r.memory_truncation = memory_truncation;
    r.scheme = scheme;
    r.mode = boundary;
    return r;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Entry {
  std::string value;
  int line = 0;
};

class Reader {
 public:
  Reader(std::map<std::string, Entry> entries, std::string source)
      : entries_(std::move(entries)), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    auto it = entries_.find(key);
    std::string where = source_;
    if (it != entries_.end()) where += ":" + std::to_string(it->second.line);
    throw ConfigError(where + ": " + key + ": " + msg);
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  double number(const std::string& key, double def) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return def;
    return parse_number(key, it->second.value);
  }

  double parse_number(const std::string& key, const std::string& text) const {
    double v = 0.0;
    const char* b = text.data();
    const char* e = b + text.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || !std::isfinite(v)) fail(key, "expected a finite number, got '" + text + "'");
    return v;
  }

  std::size_t count(const std::string& key, std::size_t def) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return def;
    const auto& text = it->second.value;
    unsigned long long v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size())
      fail(key, "expected a nonnegative integer, got '" + text + "'");
    return static_cast<std::size_t>(v);
  }

  bool flag(const std::string& key, bool def) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return def;
    if (it->second.value == "true") return true;
    if (it->second.value == "false") return false;
    fail(key, "expected true or false, got '" + it->second.value + "'");
  }

  std::string text(const std::string& key, const std::string& def) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? def : it->second.value;
  }

  template <typename E>
  E choice(const std::string& key, E def, std::initializer_list<std::pair<const char*, E>> options) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return def;
    std::string allowed;
    for (const auto& [name, value] : options) {
      if (it->second.value == name) return value;
      allowed += allowed.empty() ? name : std::string(" | ") + name;
    }
    fail(key, "expected one of " + allowed + ", got '" + it->second.value + "'");
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    auto it = entries_.find(key);
    if (it == entries_.end()) return out;
    std::stringstream ss(it->second.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      out.push_back(parse_number(key, item));
    }
    return out;
  }

 private:
  std::map<std::string, Entry> entries_;
  std::string source_;
};

inline const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"grid", {"x0", "h", "n", "boundary"}},
      {"physics",
       {"hbar", "mass", "c", "M_x_alpha", "alpha", "beta", "relativistic", "potential", "potential_strength"}},
      {"initial", {"type", "k", "center", "width", "path"}},
      {"run", {"t_final", "dt", "snapshot_stride", "memory_truncation", "scheme"}},
      {"output", {"dir"}},
      {"diagnostics", {"continuity", "bohm", "kg_residual", "trajectories", "eps_R", "current_form"}},
  };
  return keys;
}

inline bool ignored_section(const std::string& s) { return s == "manifest" || s == "summary"; }

}  // namespace detail

/// Parses and validates config text. `source` names the input in messages.
inline ExperimentConfig parse_config(const std::string& text, const std::string& source = "config",
                                     const std::filesystem::path& base_dir = {}) {
  std::map<std::string, detail::Entry> entries;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string at = source + ":" + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(at + "malformed section header '" + line + "'");
      section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
      if (!detail::ignored_section(section) && !detail::known_keys().count(section))
        throw ConfigError(at + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(at + "expected 'key = value', got '" + line + "'");
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (section.empty()) throw ConfigError(at + key + ": key outside of any section");
    if (detail::ignored_section(section)) continue;
    if (!detail::known_keys().at(section).count(key))
      throw ConfigError(at + "unknown key '" + section + "." + key + "'");
    const std::string full = section + "." + key;
    if (entries.count(full)) throw ConfigError(at + full + ": duplicate key");
    if (value.empty() && full != "diagnostics.trajectories") throw ConfigError(at + full + ": empty value");
    entries[full] = {value, line_no};
  }

  const detail::Reader r(std::move(entries), source);
  ExperimentConfig c;
  c.base_dir = base_dir;

  c.x0 = r.number("grid.x0", c.x0);
  c.h = r.number("grid.h", c.h);
  c.n = r.count("grid.n", c.n);
  c.boundary = r.choice("grid.boundary", c.boundary,
                        {{"periodic", BoundaryMode::periodic}, {"zero_extension", BoundaryMode::zero_extension}});
  if (!(c.h > 0.0)) r.fail("grid.h", "must be positive");
  if (c.n < 4) r.fail("grid.n", "must be at least 4");

  auto positive = [&](const char* key, double def) {
    const double v = r.number(key, def);
    if (!(v > 0.0)) r.fail(key, "must be positive");
    return v;
  };
  auto order = [&](const char* key) {
    const double v = r.number(key, 1.0);
    if (!(v > 0.0 && v <= 1.0)) r.fail(key, "must lie in (0, 1]");
    return v;
  };
  c.hbar = positive("physics.hbar", c.hbar);
  c.mass = positive("physics.mass", c.mass);
  c.c = positive("physics.c", c.c);
  c.diffusion = positive("physics.M_x_alpha", c.diffusion);
  c.alpha = order("physics.alpha");
  c.beta = order("physics.beta");
  c.relativistic = r.flag("physics.relativistic", c.relativistic);
  c.potential = r.choice("physics.potential", c.potential,
                         {{"zero", PotentialKind::zero},
                          {"harmonic", PotentialKind::harmonic},
                          {"linear", PotentialKind::linear}});
  c.potential_strength = r.number("physics.potential_strength", c.potential_strength);

  c.initial = r.choice("initial.type", c.initial,
                       {{"plane_wave", InitialKind::plane_wave},
                        {"gaussian", InitialKind::gaussian},
                        {"from_file", InitialKind::from_file}});
  c.k = r.number("initial.k", c.k);
  c.center = r.number("initial.center", c.center);
  c.width = r.number("initial.width", c.width);
  c.path = r.text("initial.path", "");
  if (c.initial == InitialKind::gaussian && !(c.width > 0.0)) r.fail("initial.width", "must be positive");
  if (c.initial == InitialKind::from_file && c.path.empty()) r.fail("initial.path", "required for type = from_file");
  if (c.initial != InitialKind::from_file && r.has("initial.path"))
    r.fail("initial.path", "only valid with type = from_file");

  c.t_final = r.number("run.t_final", c.t_final);
  c.dt = r.number("run.dt", c.dt);
  c.snapshot_stride = r.count("run.snapshot_stride", c.snapshot_stride);
  c.memory_truncation = r.count("run.memory_truncation", c.memory_truncation);
  c.scheme = r.choice("run.scheme", c.scheme,
                      {{"integer_cn", Scheme::integer_cn}, {"frac_explicit", Scheme::frac_explicit}});
  if (!(c.t_final >= 0.0)) r.fail("run.t_final", "must be nonnegative");
  if (!(c.dt > 0.0)) r.fail("run.dt", "must be positive");
  if (c.snapshot_stride < 1) r.fail("run.snapshot_stride", "must be at least 1");
  {
    const double ratio = c.t_final / c.dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
      r.fail("run.t_final", "must be an integer multiple of run.dt");
  }
  if (c.scheme == Scheme::integer_cn && c.beta != 1.0)
    r.fail("run.scheme", "integer_cn requires beta = 1; use frac_explicit for beta < 1");

  c.output_dir = r.text("output.dir", c.output_dir);

  c.continuity = r.flag("diagnostics.continuity", c.continuity);
  c.bohm = r.flag("diagnostics.bohm", c.bohm);
  c.kg_residual = r.flag("diagnostics.kg_residual", c.kg_residual);
  c.trajectories = r.numbers("diagnostics.trajectories");
  c.eps_R = r.number("diagnostics.eps_R", c.eps_R);
  c.current_form = r.choice("diagnostics.current_form", c.current_form,
                            {{"consistent", CurrentForm::consistent}, {"as_printed", CurrentForm::as_printed}});
  if (!(c.eps_R > 0.0 && c.eps_R < 1.0)) r.fail("diagnostics.eps_R", "must lie in (0, 1)");
  const double lo = c.x0;
  const double hi = c.x0 + static_cast<double>(c.n - 1) * c.h;
  for (double s : c.trajectories)
    if (!(s >= lo && s <= hi)) r.fail("diagnostics.trajectories", "seed " + std::to_string(s) + " outside the domain");
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file '" + file.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), file.string(), file.parent_path());
}

}  // namespace fracschro::cli
