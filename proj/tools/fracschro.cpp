// fracschro: command-line driver for the fractional Schrodinger simulator.
//
//   fracschro evolve <config>
//   fracschro bohm <config>
//   fracschro debroglie --alpha A --k K... --omega W... [--hbar H] [--M M] [--out FILE]
//   fracschro plots <run_dir>

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fracschro/cli/commands.hpp"

int main(int argc, char** argv) {
  namespace fc = fracschro::cli;
  CLI::App app{"Fractional Schrodinger equation simulator with Bohmian diagnostics"};
  app.set_version_flag("--version", FRACSCHRO_VERSION);
  app.require_subcommand(1);

  std::string evolve_config;
  auto* evolve = app.add_subcommand("evolve", "evolve a wavefunction and write snapshot/continuity CSVs");
  evolve->add_option("config", evolve_config, "experiment config file")->required();

  std::string bohm_config;
  auto* bohm = app.add_subcommand("bohm", "evolve, then write Bohmian fields and trajectories");
  bohm->add_option("config", bohm_config, "experiment config file")->required();

  fc::DeBroglieRequest rq;
  auto* debroglie = app.add_subcommand("debroglie", "tabulate the fractional de Broglie relations");
  debroglie->add_option("--alpha", rq.alpha, "spatial order in (0, 1]")->required();
  debroglie->add_option("--k", rq.k, "wavenumbers (space or comma separated)")->delimiter(',');
  debroglie->add_option("--omega", rq.omega, "frequencies (space or comma separated)")->delimiter(',');
  debroglie->add_option("--hbar", rq.hbar, "action scale")->capture_default_str();
  debroglie->add_option("--M", rq.diffusion, "diffusion factor M_x_alpha")->capture_default_str();
  debroglie->add_option("--out", rq.out, "output CSV (default: standard output)");

  std::string run_dir;
  auto* plots = app.add_subcommand("plots", "write gnuplot scripts for the CSVs in a run directory");
  plots->add_option("run_dir", run_dir, "directory written by evolve or bohm")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return fc::exit_config;
  }

  if (*evolve) return fc::cmd_evolve(evolve_config, std::cout, std::cerr);
  if (*bohm) return fc::cmd_bohm(bohm_config, std::cout, std::cerr);
  if (*debroglie) return fc::cmd_debroglie(rq, std::cout, std::cerr);
  return fc::emit_plots(run_dir, std::cout, std::cerr);
}
