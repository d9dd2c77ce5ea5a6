// Command-line front end: simulate Loewner curves by slit-map composition,
// rasterize hulls by blow-up times, run coupled convergence studies, and run
// the lemma check suite.

#include <CLI11.hpp>

#include <exception>
#include <iostream>

#include "loewner/run.hpp"
#include "loewner/version.hpp"

using loewner::cli::RunConfig;

namespace {

void add_driver_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--driver", cfg.driver, "driver kind: bm|rw|sqrt|zero|file")
      ->capture_default_str();
  cmd->add_option("--kappa", cfg.kappa_str, "kappa as rational (8/3) or decimal")
      ->capture_default_str();
  cmd->add_option("--c", cfg.c, "coefficient of the c*sqrt(t) driver")->capture_default_str();
  cmd->add_option("--n", cfg.n, "number of grid steps")->capture_default_str();
  cmd->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--file", cfg.driver_file, "driver file path (with --driver file)");
  cmd->add_option("--perturb", cfg.perturb_eps, "per-entry perturbation bound (Variant 1)");
  cmd->add_option("--perturb-seed", cfg.perturb_seed, "seed for the perturbation");
  cmd->add_option("--threads", cfg.threads, "worker threads, 0 = hardware count");
}

int dispatch(const std::string& sub, RunConfig& cfg) {
  try {
    cfg.kappa = loewner::cli::parse_kappa(cfg.kappa_str);
    if (sub == "simulate") return loewner::cli::run_simulate(cfg);
    if (sub == "hull") return loewner::cli::run_hull(cfg);
    if (sub == "converge") return loewner::cli::run_converge(cfg);
    if (sub == "checks") return loewner::cli::run_checks(cfg);
    std::cerr << "error: unknown subcommand " << sub << "\n";
    return loewner::cli::kBadConfig;
  } catch (const loewner::cli::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return loewner::cli::kBadConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return loewner::cli::kBadConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return loewner::cli::kBadConfig;
  } catch (const loewner::ode::SolverError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return loewner::cli::kNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return loewner::cli::kNumericalFailure;
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("loewner_sim ") + loewner::kVersion +
               " - Loewner curve simulation by slit-map composition"};
  app.require_subcommand(1);
  RunConfig cfg;

  CLI::App* sim = app.add_subcommand("simulate", "simulate a curve, write CSV/SVG");
  add_driver_flags(sim, cfg);
  sim->add_option("--mode", cfg.mode, "tilted|vertical")->capture_default_str();
  sim->add_option("--m", cfg.m, "interior samples per step (tilted mode)")->capture_default_str();
  sim->add_option("--csv", cfg.csv_path, "curve CSV output path");
  sim->add_option("--svg", cfg.svg_path, "SVG rendering output path");
  sim->add_option("--save-driver", cfg.driver_out, "also save the driver samples");

  CLI::App* hull = app.add_subcommand("hull", "rasterize the hull by blow-up times, write PGM");
  add_driver_flags(hull, cfg);
  hull->add_option("--t", cfg.t, "capacity time")->capture_default_str();
  hull->add_option("--xmin", cfg.xmin)->capture_default_str();
  hull->add_option("--xmax", cfg.xmax)->capture_default_str();
  hull->add_option("--ymin", cfg.ymin)->capture_default_str();
  hull->add_option("--ymax", cfg.ymax)->capture_default_str();
  hull->add_option("--resolution", cfg.resolution, "pixels per unit")->capture_default_str();
  hull->add_option("--eps-blow", cfg.eps_blow, "blow-up guard radius")->capture_default_str();
  hull->add_option("--tol", cfg.rel_tol, "ODE relative tolerance")->capture_default_str();
  hull->add_option("--pgm", cfg.pgm_path, "PGM output path")->required();

  CLI::App* conv = app.add_subcommand("converge", "coupled convergence study, write JSON");
  add_driver_flags(conv, cfg);
  conv->add_option("--n0", cfg.n0, "coarsest level")->capture_default_str();
  conv->add_option("--doublings", cfg.doublings, "number of refinements")->capture_default_str();
  conv->add_option("--m", cfg.m_conv, "interior samples per step")->capture_default_str();
  conv->add_option("--seeds", cfg.num_seeds, "number of seeds (base seed, base+1, ...)")
      ->capture_default_str();
  conv->add_option("--json", cfg.json_path, "JSON report output path");
  conv->add_option("--tol", cfg.rel_tol, "ODE relative tolerance")->capture_default_str();

  CLI::App* checks = app.add_subcommand("checks", "run the lemma check suite");
  add_driver_flags(checks, cfg);
  checks->add_option("--trials", cfg.trials, "random slit maps for the monotonicity check")
      ->capture_default_str();
  checks->add_option("--jrw-pairs", cfg.jrw_pairs, "random constant-driver pairs")
      ->capture_default_str();
  checks->add_option("--m", cfg.m, "interior samples per step")->capture_default_str();
  checks->add_option("--json", cfg.json_path, "JSON results output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? loewner::cli::kOk : loewner::cli::kBadConfig;
  }

  for (auto* sub : {sim, hull, conv, checks})
    if (sub->parsed()) return dispatch(sub->get_name(), cfg);
  return loewner::cli::kBadConfig;
}
