#pragma once

// Subcommands of the fracschro tool. Each returns a process exit status:
//   0 success, 1 configuration / input error, 2 numerical instability,
//   3 decomposition failed because the wavefunction vanishes everywhere.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "fracschro/bohm.hpp"
#include "fracschro/cli/config.hpp"
#include "fracschro/cli/io.hpp"
#include "fracschro/errors.hpp"
#include "fracschro/evolver.hpp"
#include "fracschro/model.hpp"
#include "fracschro/observables.hpp"

#ifndef FRACSCHRO_VERSION
#define FRACSCHRO_VERSION "0.0.0"
#endif

namespace fracschro::cli {

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_instability = 2, exit_all_node = 3 };

inline constexpr const char* output_root_env = "FRACSCHRO_OUTPUT_ROOT";

/// Relative output paths are placed under $FRACSCHRO_OUTPUT_ROOT when it is set.
inline std::filesystem::path resolve_output(const std::string& dir) {
  std::filesystem::path p(dir);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv(output_root_env); root && *root) return std::filesystem::path(root) / p;
  return p;
}

inline std::string indexed(const char* stem, std::size_t i, const char* ext = ".csv") {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04zu%s", stem, i, ext);
  return buf;
}

inline GridFunction initial_wavefunction(const ExperimentConfig& c) {
  const Grid1D g = c.grid();
  switch (c.initial) {
    case InitialKind::plane_wave: {
      GridFunction psi(g);
      for (std::size_t j = 0; j < g.n; ++j) psi[j] = std::exp(Complex(0.0, c.k * g.x(j)));
      return psi;
    }
    case InitialKind::gaussian: {
      GridFunction psi(g);
      const double norm = std::pow(2.0 * std::numbers::pi * c.width * c.width, -0.25);
      for (std::size_t j = 0; j < g.n; ++j) {
        const double d = g.x(j) - c.center;
        psi[j] = norm * std::exp(-d * d / (4.0 * c.width * c.width)) * std::exp(Complex(0.0, c.k * d));
      }
      return psi;
    }
    default: {
      std::filesystem::path p(c.path);
      if (p.is_relative()) p = c.base_dir / p;
      return read_wavefunction(p, g);
    }
  }
}

/// An evolved run: resolved inputs plus the snapshot stack.
struct Simulation {
  ExperimentConfig config;
  PhysicalParams physics;
  RunConfig run;
  TimeStack snapshots;
  double stability_number = 0.0;
};

inline Simulation simulate(const ExperimentConfig& c) {
  Simulation s{c, c.physics(), c.run(), {}, 0.0};
  const GridFunction psi0 = initial_wavefunction(c);
  Propagator prop(psi0.grid(), s.physics, s.run);
  s.stability_number = prop.stability_number();
  const std::size_t n_steps = s.run.steps();
  auto state = prop.initial_state(psi0);
  s.snapshots.push(0.0, state.psi);
  for (std::size_t i = 0; i < n_steps; ++i) {
    prop.advance(state);
    if (state.step % s.run.snapshot_stride == 0) s.snapshots.push(state.t, state.psi);
  }
  return s;
}

namespace detail {

inline double total_probability(const GridFunction& psi) {
  double p = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j) p += std::norm(psi[j]);
  return p * psi.grid().h;
}

inline std::filesystem::path prepare_output(const ExperimentConfig& c) {
  const auto out = resolve_output(c.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec || !std::filesystem::is_directory(out))
    throw ConfigError("output.dir: cannot create '" + out.string() + "'");
  return out;
}

inline void common_meta(Manifest& m, const char* command, const std::filesystem::path& out, const Simulation& s,
                        double wall) {
  m.set("command", command);
  m.set("code_version", FRACSCHRO_VERSION);
  m.set("output_path", std::filesystem::absolute(out).lexically_normal().string());
  m.set("threads", "1");
  m.set("wall_time_s", format_number(wall));
  m.set("steps", std::to_string(s.run.steps()));
  m.set("snapshots", std::to_string(s.snapshots.size()));
  m.set("memory_truncation", std::to_string(s.run.memory_truncation));
  m.set("memory_mode", s.run.memory_truncation == 0 ? "full" : "truncated");
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const InstabilityError& e) {
    err << "error: " << e.what() << "\n";
    return exit_instability;
  } catch (const NodeError& e) {
    err << "error: " << e.what() << "\n";
    return exit_all_node;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_config;
  }
}

}  // namespace detail

/// evolve: snapshot CSVs (x, re_psi, im_psi, rho), continuity CSVs
/// (x, rho_dt, dJ_dx, residual) and optional Klein-Gordon residual CSVs.
inline int cmd_evolve(const std::filesystem::path& config_file, std::ostream& log, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto cfg = load_config(config_file);
    const auto start = std::chrono::steady_clock::now();
    const auto sim = simulate(cfg);
    const auto out = detail::prepare_output(cfg);
    const auto& st = sim.snapshots;
    const Grid1D g = cfg.grid();

    for (std::size_t i = 0; i < st.size(); ++i) {
      CsvWriter w(out / indexed("snapshot", i), {"x", "re_psi", "im_psi", "rho"});
      const auto& psi = st.frames[i];
      for (std::size_t j = 0; j < g.n; ++j) w.row({g.x(j), psi[j].real(), psi[j].imag(), std::norm(psi[j])});
    }

    Manifest m;
    const double p0 = detail::total_probability(st.frames.front());
    const double p1 = detail::total_probability(st.frames.back());
    m.scalar("total_probability_initial", p0);
    m.scalar("total_probability_final", p1);
    m.scalar("probability_drift", p0 > 0.0 ? std::abs(p1 - p0) / p0 : 0.0);
    if (cfg.scheme == Scheme::frac_explicit) m.scalar("stability_number", sim.stability_number);

    if (cfg.continuity && st.size() >= 2) {
      const auto rho = density_stack(st);
      double worst = 0.0;
      double last = 0.0;
      double imag_j = 0.0;
      for (std::size_t i = 1; i < st.size(); ++i) {
        const auto r = continuity_at(st, rho, i, sim.physics, cfg.boundary, cfg.current_form);
        CsvWriter w(out / indexed("continuity", i), {"x", "rho_dt", "dJ_dx", "residual"});
        for (std::size_t j = 0; j < g.n; ++j) {
          w.row({g.x(j), r.rho_dt[j], r.dj_dx[j].real(), r.residual[j].real()});
          imag_j = std::max(imag_j, std::abs(r.j[j].imag()));
        }
        worst = std::max(worst, r.interior_residual_l2);
        last = r.interior_residual_l2;
      }
      m.scalar("continuity_residual_l2_final", last);
      m.scalar("continuity_residual_l2_max", worst);
      m.scalar("current_imag_max", imag_j);
    }

    if (cfg.kg_residual && st.size() >= 3) {
      double last = 0.0;
      for (std::size_t i = 2; i < st.size(); ++i) {
        TimeStack hist;
        for (std::size_t k = 0; k <= i; ++k) hist.push(st.times[k], st.frames[k]);
        const auto r = klein_gordon_residual(hist, sim.physics, cfg.boundary);
        CsvWriter w(out / indexed("kg_residual", i), {"x", "re_residual", "im_residual"});
        for (std::size_t j = 0; j < g.n; ++j) w.row({g.x(j), r[j].real(), r[j].imag()});
        last = l2_norm(r, interior(g.n));
      }
      m.scalar("kg_residual_l2_final", last);
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    detail::common_meta(m, "evolve", out, sim, wall);
    m.write(out / "manifest_evolve.txt", cfg);
    log << "evolve: " << st.size() << " snapshots written to " << out.string() << "\n";
    return static_cast<int>(exit_ok);
  });
}

/// bohm: per-snapshot CSVs (x, R, S, Q, p, v, F, E, K, balance_residual,
/// node_mask) and one trajectory CSV (t, x) per configured seed.
inline int cmd_bohm(const std::filesystem::path& config_file, std::ostream& log, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto cfg = load_config(config_file);
    const auto start = std::chrono::steady_clock::now();
    const auto sim = simulate(cfg);
    const auto& st = sim.snapshots;
    const Grid1D g = cfg.grid();
    const auto series = bohm_series(st, sim.physics, cfg.boundary, cfg.eps_R, cfg.current_form);
    const auto out = detail::prepare_output(cfg);

    Manifest m;
    double balance_last = std::nan("");
    std::size_t nodes = 0;
    RealTimeStack velocity;
    for (std::size_t i = 0; i < series.size(); ++i) {
      const auto& f = series[i];
      CsvWriter w(out / indexed("bohm", i),
                  {"x", "R", "S", "Q", "p", "v", "F", "E", "K", "balance_residual", "node_mask"});
      RealGridFunction bal(g, std::vector<double>(g.n, std::nan("")));
      if (i >= 1) {
        const auto b = energy_balance_residual(f.E_alpha, f.K_alpha, f.Q_alpha, sim.physics.potential, &f.field_mask);
        bal = b.residual;
        balance_last = b.interior_l2;
      }
      for (std::size_t j = 0; j < g.n; ++j) {
        w.row({g.x(j), f.R[j], f.S[j], f.Q_alpha[j], f.p_alpha[j], f.v_alpha[j], f.F_alpha[j], f.E_alpha[j],
               f.K_alpha[j], bal[j], f.node_mask[j] ? 1.0 : 0.0});
      }
      nodes = static_cast<std::size_t>(std::count(f.node_mask.begin(), f.node_mask.end(), true));
      velocity.push(st.times[i], f.v_alpha);
    }

    std::size_t exits = 0;
    for (std::size_t s = 0; s < cfg.trajectories.size(); ++s) {
      const auto tr = integrate_trajectory(velocity, cfg.trajectories[s], sim.physics.alpha, cfg.dt);
      if (tr.exited) ++exits;
      CsvWriter w(out / indexed("trajectory", s), {"t", "x"});
      for (std::size_t k = 0; k < tr.times.size(); ++k) w.row({tr.times[k], tr.positions[k]});
    }

    m.scalar("energy_balance_l2_final", balance_last);
    m.scalar("node_points_final", static_cast<double>(nodes));
    m.scalar("trajectory_exits", static_cast<double>(exits));
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    detail::common_meta(m, "bohm", out, sim, wall);
    m.write(out / "manifest_bohm.txt", cfg);
    log << "bohm: " << series.size() << " snapshots, " << cfg.trajectories.size() << " trajectories written to "
        << out.string() << "\n";
    return static_cast<int>(exit_ok);
  });
}

struct DeBroglieRequest {
  double alpha = 1.0;
  std::vector<double> k;
  std::vector<double> omega;
  double hbar = 1.0;
  double diffusion = 1.0;
  std::string out;  ///< empty: write to the log stream
};

/// debroglie: CSV (alpha, k, omega, E, p) over the cross product k x omega.
inline int cmd_debroglie(const DeBroglieRequest& rq, std::ostream& log, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (!(rq.alpha > 0.0 && rq.alpha <= 1.0)) throw ConfigError("--alpha: must lie in (0, 1]");
    if (rq.k.empty()) throw ConfigError("--k: at least one wavenumber required");
    if (rq.omega.empty()) throw ConfigError("--omega: at least one frequency required");
    for (double v : rq.k)
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("--k: values must be finite and nonnegative");
    for (double v : rq.omega)
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("--omega: values must be finite and nonnegative");
    if (!(rq.hbar > 0.0) || !std::isfinite(rq.hbar)) throw ConfigError("--hbar: must be positive");
    if (!(rq.diffusion > 0.0) || !std::isfinite(rq.diffusion)) throw ConfigError("--M: must be positive");

    PhysicalParams prm;
    prm.alpha = FracOrder(rq.alpha);
    prm.hbar = rq.hbar;
    prm.diffusion = rq.diffusion;
    auto emit = [&](CsvWriter& w) {
      for (double k : rq.k)
        for (double om : rq.omega) {
          const auto d = de_broglie(k, om, prm);
          w.row({rq.alpha, k, om, d.E, d.p});
        }
    };
    const std::vector<std::string> header{"alpha", "k", "omega", "E", "p"};
    if (rq.out.empty()) {
      CsvWriter w(log, header);
      emit(w);
    } else {
      const auto path = resolve_output(rq.out);
      if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
      CsvWriter w(path, header);
      emit(w);
    }
    return static_cast<int>(exit_ok);
  });
}

namespace detail {

inline std::vector<std::string> files_with_prefix(const std::filesystem::path& dir, const std::string& prefix) {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto name = e.path().filename().string();
    if (name.rfind(prefix, 0) == 0 && e.path().extension() == ".csv") out.push_back(name);
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct PlotSpec {
  const char* prefix;
  const char* script;
  const char* title;
  const char* xlabel;
  const char* ylabel;
  const char* columns;  ///< gnuplot `using` clause
};

inline void write_plot(const std::filesystem::path& dir, const PlotSpec& p, const std::vector<std::string>& files) {
  std::ofstream o(dir / p.script);
  if (!o) throw ConfigError("cannot write '" + (dir / p.script).string() + "'");
  o << "# " << p.title << "\n"
    << "# usage: gnuplot -p " << p.script << " (from this directory)\n"
    << "set datafile separator ','\n"
    << "set title '" << p.title << "'\n"
    << "set xlabel '" << p.xlabel << "'\n"
    << "set ylabel '" << p.ylabel << "'\n"
    << "set key outside right\n"
    << "plot ";
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (i) o << ", \\\n     ";
    o << "'" << files[i] << "' using " << p.columns << " skip 1 with lines title '" << files[i] << "'";
  }
  o << "\n";
}

}  // namespace detail

/// plots: one gnuplot script per diagnostic found in `run_dir`.
inline int emit_plots(const std::filesystem::path& run_dir, std::ostream& log, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (!std::filesystem::is_directory(run_dir)) throw ConfigError("run directory '" + run_dir.string() + "' not found");
    static const detail::PlotSpec specs[] = {
        {"snapshot_", "plot_density.gp", "probability density per snapshot", "x", "rho", "1:4"},
        {"continuity_", "plot_continuity.gp", "continuity residual per snapshot", "x", "residual", "1:4"},
        {"kg_residual_", "plot_kg_residual.gp", "Klein-Gordon residual (real part)", "x", "residual", "1:2"},
        {"bohm_", "plot_quantum_potential.gp", "quantum potential Q per snapshot", "x", "Q", "1:4"},
        {"bohm_", "plot_energy_balance.gp", "energy balance residual E - K - Q - V", "x", "residual", "1:10"},
        {"trajectory_", "plot_trajectories.gp", "Bohmian trajectories", "t", "x", "1:2"},
    };
    std::size_t written = 0;
    for (const auto& p : specs) {
      const auto files = detail::files_with_prefix(run_dir, p.prefix);
      if (files.empty()) continue;
      detail::write_plot(run_dir, p, files);
      log << "plots: wrote " << (run_dir / p.script).string() << "\n";
      ++written;
    }
    if (written == 0) throw ConfigError("no diagnostic CSVs found in '" + run_dir.string() + "'");
    return static_cast<int>(exit_ok);
  });
}

}  // namespace fracschro::cli
