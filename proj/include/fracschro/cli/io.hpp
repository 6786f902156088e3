#pragma once

// CSV and manifest files. Numbers are written with 17 significant digits so
// that every double round-trips; output is byte-deterministic.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fracschro/cli/config.hpp"
#include "fracschro/errors.hpp"
#include "fracschro/grid.hpp"

namespace fracschro::cli {

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Comma-separated output with a mandatory header row.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(&out) { start(header); }

  CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& header)
      : file_(std::make_unique<std::ofstream>(file)), out_(file_.get()) {
    if (!*file_) throw ConfigError("cannot write '" + file.string() + "'");
    start(header);
  }

  void row(const std::vector<double>& values) {
    if (values.size() != columns_) throw ConfigError("csv: row width does not match header");
    for (std::size_t i = 0; i < values.size(); ++i) *out_ << (i ? "," : "") << format_number(values[i]);
    *out_ << '\n';
  }

 private:
  void start(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) *out_ << (i ? "," : "") << header[i];
    *out_ << '\n';
    columns_ = header.size();
  }

  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_;
  std::size_t columns_ = 0;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ConfigError("csv: missing column '" + name + "'");
  }
};

inline CsvTable read_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read '" + file.string() + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("'" + file.string() + "': empty file");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(detail::trim(cell));
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      cell = detail::trim(cell);
      double v = 0.0;
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || p != cell.data() + cell.size())
        throw ConfigError("'" + file.string() + "':" + std::to_string(line_no) + ": not a number: '" + cell + "'");
      row.push_back(v);
    }
    if (row.size() != t.header.size())
      throw ConfigError("'" + file.string() + "':" + std::to_string(line_no) + ": wrong number of columns");
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Reads psi from a CSV with columns x, re_psi, im_psi (snapshot files
/// qualify). Sample count and positions must match `grid`.
inline GridFunction read_wavefunction(const std::filesystem::path& file, const Grid1D& grid) {
  const auto t = read_csv(file);
  const auto cx = t.column("x");
  const auto cr = t.column("re_psi");
  const auto ci = t.column("im_psi");
  if (t.rows.size() != grid.n)
    throw ConfigError("'" + file.string() + "': " + std::to_string(t.rows.size()) + " rows, grid has " +
                      std::to_string(grid.n));
  GridFunction psi(grid);
  for (std::size_t j = 0; j < grid.n; ++j) {
    const auto& r = t.rows[j];
    if (std::abs(r[cx] - grid.x(j)) > 1e-9 * std::max(1.0, std::abs(grid.x(j))))
      throw ConfigError("'" + file.string() + "': x column does not match the configured grid at row " +
                        std::to_string(j + 1));
    psi[j] = Complex(r[cr], r[ci]);
  }
  if (!psi.all_finite()) throw ConfigError("'" + file.string() + "': non-finite wavefunction values");
  return psi;
}

/// The resolved configuration in the config file syntax.
inline std::string echo_config(const ExperimentConfig& c) {
  std::ostringstream o;
  auto num = [](double v) { return format_number(v); };
  o << "[grid]\n"
    << "x0 = " << num(c.x0) << "\n"
    << "h = " << num(c.h) << "\n"
    << "n = " << c.n << "\n"
    << "boundary = " << to_string(c.boundary) << "\n\n";
  o << "[physics]\n"
    << "hbar = " << num(c.hbar) << "\n"
    << "mass = " << num(c.mass) << "\n"
    << "c = " << num(c.c) << "\n"
    << "M_x_alpha = " << num(c.diffusion) << "\n"
    << "alpha = " << num(c.alpha) << "\n"
    << "beta = " << num(c.beta) << "\n"
    << "relativistic = " << (c.relativistic ? "true" : "false") << "\n"
    << "potential = " << to_string(c.potential) << "\n"
    << "potential_strength = " << num(c.potential_strength) << "\n\n";
  o << "[initial]\n"
    << "type = " << to_string(c.initial) << "\n"
    << "k = " << num(c.k) << "\n"
    << "center = " << num(c.center) << "\n"
    << "width = " << num(c.width) << "\n";
  if (c.initial == InitialKind::from_file) {
    const auto p = std::filesystem::path(c.path);
    o << "path = " << (p.is_absolute() ? p : std::filesystem::absolute(c.base_dir / p)).lexically_normal().string()
      << "\n";
  }
  o << "\n[run]\n"
    << "t_final = " << num(c.t_final) << "\n"
    << "dt = " << num(c.dt) << "\n"
    << "snapshot_stride = " << c.snapshot_stride << "\n"
    << "memory_truncation = " << c.memory_truncation << "\n"
    << "scheme = " << to_string(c.scheme) << "\n\n";
  o << "[output]\n"
    << "dir = " << c.output_dir << "\n\n";
  o << "[diagnostics]\n"
    << "continuity = " << (c.continuity ? "true" : "false") << "\n"
    << "bohm = " << (c.bohm ? "true" : "false") << "\n"
    << "kg_residual = " << (c.kg_residual ? "true" : "false") << "\n"
    << "trajectories = ";
  for (std::size_t i = 0; i < c.trajectories.size(); ++i) o << (i ? ", " : "") << num(c.trajectories[i]);
  o << "\n"
    << "eps_R = " << num(c.eps_R) << "\n"
    << "current_form = " << to_string(c.current_form) << "\n";
  return o.str();
}

/// Run manifest: the config echo followed by [manifest] (run metadata) and
/// [summary] (diagnostic scalars) sections.
struct Manifest {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::pair<std::string, double>> summary;

  void set(std::string key, std::string value) { meta.emplace_back(std::move(key), std::move(value)); }
  void scalar(std::string key, double value) { summary.emplace_back(std::move(key), value); }

  void write(const std::filesystem::path& file, const ExperimentConfig& c) const {
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot write '" + file.string() + "'");
    out << echo_config(c) << "\n[manifest]\n";
    for (const auto& [k, v] : meta) out << k << " = " << v << "\n";
    out << "\n[summary]\n";
    for (const auto& [k, v] : summary) out << k << " = " << format_number(v) << "\n";
  }
};

}  // namespace fracschro::cli
