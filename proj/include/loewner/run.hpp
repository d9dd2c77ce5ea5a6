#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "loewner/diagnostics.hpp"
#include "loewner/io.hpp"
#include "loewner/version.hpp"

namespace loewner::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exit codes: 0 success, 1 validation error, 2 numerical failure,
// 3 check violation.
enum ExitCode { kOk = 0, kBadConfig = 1, kNumericalFailure = 2, kCheckViolation = 3 };

struct RunConfig {
  // driver spec
  std::string driver = "bm";  // bm | rw | sqrt | zero | file
  std::string kappa_str = "8/3";
  double kappa = 8.0 / 3.0;
  double c = 1.0;
  int n = 256;
  std::uint64_t seed = 1;
  double perturb_eps = 0.0;
  std::uint64_t perturb_seed = 1;
  std::string driver_file;

  // simulation
  std::string mode = "tilted";  // tilted | vertical
  int m = 4;
  unsigned threads = 0;

  // outputs
  std::string csv_path, svg_path, pgm_path, json_path, driver_out;

  // hull
  double t = 1.0;
  double xmin = -2.0, xmax = 2.0, ymin = 0.05, ymax = 2.5;
  double resolution = 20.0;

  // tolerances
  double eps_blow = 1e-6;
  double rel_tol = 1e-10;

  // converge
  int n0 = 100;
  int doublings = 3;
  int m_conv = 2;
  int num_seeds = 1;

  // checks
  int trials = 10000;
  int jrw_pairs = 100;
};

// kappa accepted as "p/q" or a plain decimal; the string is kept verbatim in
// output metadata so reruns are exact.
inline double parse_kappa(const std::string& s) {
  const auto slash = s.find('/');
  try {
    if (slash == std::string::npos) {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw ConfigError("trailing characters in kappa: " + s);
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("kappa must be finite and >= 0");
      return v;
    }
    std::size_t p1 = 0, p2 = 0;
    const std::string num = s.substr(0, slash), den = s.substr(slash + 1);
    const double a = std::stod(num, &p1);
    const double b = std::stod(den, &p2);
    if (p1 != num.size() || p2 != den.size() || b == 0.0)
      throw ConfigError("malformed rational kappa: " + s);
    const double v = a / b;
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("kappa must be finite and >= 0");
    return v;
  } catch (const std::invalid_argument&) {
    throw ConfigError("malformed kappa: " + s);
  } catch (const std::out_of_range&) {
    throw ConfigError("kappa out of range: " + s);
  }
}

inline ode::Options ode_options(const RunConfig& cfg) {
  ode::Options opt;
  opt.rel_tol = cfg.rel_tol;
  opt.eps_blow = cfg.eps_blow;
  return opt;
}

inline SampledDriver make_driver(const RunConfig& cfg) {
  if (cfg.n < 1) throw ConfigError("n must be >= 1");
  SampledDriver d;
  if (cfg.driver == "bm") {
    d = sample_bm(cfg.kappa, cfg.n, cfg.seed);
  } else if (cfg.driver == "rw") {
    d = sample_rw(cfg.kappa, cfg.n, cfg.seed);
  } else if (cfg.driver == "sqrt") {
    d = sqrt_driver(cfg.c, cfg.n);
  } else if (cfg.driver == "zero") {
    d = zero_driver(cfg.n);
  } else if (cfg.driver == "file") {
    if (cfg.driver_file.empty()) throw ConfigError("driver=file requires --file");
    d = load_driver(cfg.driver_file,
                    cfg.mode == "vertical" ? InterpMode::vertical_step : InterpMode::sqrt_interp);
  } else {
    throw ConfigError("unknown driver kind: " + cfg.driver);
  }
  if (cfg.perturb_eps > 0.0) d = perturb(d, cfg.perturb_eps, cfg.perturb_seed);
  return d;
}

inline std::string driver_meta(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("driver", cfg.driver);
  if (cfg.driver == "bm" || cfg.driver == "rw") {
    kv.emplace_back("kappa", cfg.kappa_str);
    kv.emplace_back("seed", std::to_string(cfg.seed));
    kv.emplace_back("rng", Rng::kName);
  }
  if (cfg.driver == "sqrt") kv.emplace_back("c", detail::fmt17(cfg.c));
  if (cfg.driver == "file") kv.emplace_back("file", cfg.driver_file);
  kv.emplace_back("n", std::to_string(cfg.n));
  kv.emplace_back("mode", cfg.mode);
  kv.emplace_back("m", std::to_string(cfg.m));
  if (cfg.perturb_eps > 0.0) {
    kv.emplace_back("perturb_eps", detail::fmt17(cfg.perturb_eps));
    kv.emplace_back("perturb_seed", std::to_string(cfg.perturb_seed));
  }
  return io::meta_line(kv);
}

// ---------------------------------------------------------------------------
// simulate: curve CSV and/or SVG
// ---------------------------------------------------------------------------
inline int run_simulate(const RunConfig& cfg) {
  if (cfg.mode != "tilted" && cfg.mode != "vertical")
    throw ConfigError("mode must be tilted or vertical");
  if (cfg.m < 1) throw ConfigError("m must be >= 1");
  const SampledDriver d = make_driver(cfg);
  const ChainMode mode = cfg.mode == "vertical" ? ChainMode::vertical : ChainMode::tilted;
  const ZipperChain chain = build_chain(d, mode);
  const Curve curve = simulate(chain, cfg.m, cfg.threads);
  const std::string meta = driver_meta(cfg);
  if (!cfg.csv_path.empty()) io::write_curve_csv(cfg.csv_path, curve, meta);
  if (!cfg.svg_path.empty()) io::write_curve_svg(cfg.svg_path, curve, meta);
  if (!cfg.driver_out.empty()) save_driver(d, cfg.driver_out);
  if (cfg.csv_path.empty() && cfg.svg_path.empty() && cfg.driver_out.empty())
    std::cout << io::curve_csv(curve, meta);
  else
    std::cout << "simulate: " << curve.points.size() << " samples, mode=" << cfg.mode << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// hull: blow-up-time raster to PGM
// ---------------------------------------------------------------------------
inline int run_hull(const RunConfig& cfg) {
  if (cfg.pgm_path.empty()) throw ConfigError("hull requires --pgm");
  const SampledDriver d = make_driver(cfg);
  const ode::Rect bounds{cfg.xmin, cfg.xmax, cfg.ymin, cfg.ymax};
  const ode::HullRaster raster =
      ode::hull_raster(d, cfg.t, bounds, cfg.resolution, ode_options(cfg), cfg.threads);
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("t", detail::fmt17(cfg.t));
  kv.emplace_back("eps_blow", detail::fmt17(cfg.eps_blow));
  const std::string meta = driver_meta(cfg) + " " + io::meta_line(kv);
  io::write_raster_pgm(cfg.pgm_path, raster, meta);
  long marked = 0;
  for (auto v : raster.mask) marked += v;
  std::cout << "hull: " << raster.nx << "x" << raster.ny << " raster, " << marked
            << " swallowed pixels, " << raster.failures << " failures\n";
  return raster.failures == 0 ? kOk : kNumericalFailure;
}

// ---------------------------------------------------------------------------
// converge: coupled convergence study to JSON
// ---------------------------------------------------------------------------
inline int run_converge(const RunConfig& cfg) {
  diag::StudyConfig sc;
  sc.family = cfg.driver == "zero" ? "zero" : (cfg.driver == "sqrt" ? "sqrt" : "bm");
  if (cfg.driver != "bm" && cfg.driver != "sqrt" && cfg.driver != "zero")
    throw ConfigError("converge supports driver kinds bm, sqrt, zero");
  sc.kappa = cfg.kappa;
  sc.c = cfg.c;
  sc.n0 = cfg.n0;
  sc.doublings = cfg.doublings;
  sc.m = cfg.m_conv;
  sc.ode_opt = ode_options(cfg);
  sc.threads = cfg.threads;
  if (cfg.num_seeds < 1) throw ConfigError("seeds must be >= 1");

  nlohmann::json out;
  int n_decreasing = 0, n_rho_pos = 0;
  nlohmann::json reports = nlohmann::json::array();
  for (int s = 0; s < cfg.num_seeds; ++s) {
    sc.seed = cfg.seed + static_cast<std::uint64_t>(s);
    const diag::ConvergenceReport rep = diag::convergence_study(sc);
    bool decreasing = rep.d_n.size() >= 2;
    for (std::size_t j = 0; j + 1 < rep.d_n.size(); ++j)
      decreasing = decreasing && rep.d_n[j] > rep.d_n[j + 1];
    n_decreasing += decreasing ? 1 : 0;
    n_rho_pos += (!rep.exact && rep.rho_fit > 0.0) ? 1 : 0;
    reports.push_back(rep.to_json());
    std::cout << "seed " << sc.seed << ": rho_fit="
              << (rep.exact ? std::string("exact(all d_n=0)") : std::to_string(rep.rho_fit))
              << (decreasing ? " d_n decreasing" : "") << "\n";
  }
  if (cfg.num_seeds == 1) {
    out = reports[0];
  } else {
    out["reports"] = reports;
    out["summary"] = {{"seeds", cfg.num_seeds},
                      {"frac_d_decreasing", double(n_decreasing) / cfg.num_seeds},
                      {"frac_rho_positive", double(n_rho_pos) / cfg.num_seeds}};
  }
  if (!cfg.json_path.empty())
    detail::write_text_atomic(cfg.json_path, out.dump(2) + "\n");
  else
    std::cout << out.dump(2) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// checks: lemma suite with a negative control, aggregated pass/fail
// ---------------------------------------------------------------------------
inline SampledDriver const_driver(double v, int n) {
  SampledDriver d = zero_driver(n);
  for (auto& x : d.values) x = v;
  d.prov.kind = "const";
  return d;
}

inline int run_checks(const RunConfig& cfg) {
  bool all_pass = true;
  nlohmann::json results = nlohmann::json::array();
  auto record = [&](const std::string& name, bool pass, const nlohmann::json& detail) {
    all_pass = all_pass && pass;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << name << "\n";
    nlohmann::json j = detail;
    j["check"] = name;
    results.push_back(j);
  };

  // Lemma: Im G(iy) increasing
  const auto mono = diag::check_G_monotone(cfg.trials, cfg.seed);
  record("G_imag_monotone(" + std::to_string(cfg.trials) + " params)", mono.pass, mono.to_json());

  // negative control: a conjugated (sign-flipped) slit map must be rejected
  const auto flipped = diag::check_G_monotone_impl(
      64, cfg.seed, [](const SlitParams& p, Complex z) { return std::conj(eval_tilted(p, z)); });
  record("negative_control_flipped_map_detected", !flipped.pass, flipped.to_json());

  // oscillation bounds across the stock curve set
  {
    struct Item {
      std::string name;
      SampledDriver d;
      ChainMode mode;
    };
    std::vector<Item> items;
    items.push_back({"zero_tilted", zero_driver(128), ChainMode::tilted});
    items.push_back({"zero_vertical", zero_driver(128), ChainMode::vertical});
    items.push_back({"sqrt_c1", sqrt_driver(1.0, 128), ChainMode::tilted});
    items.push_back({"bm", sample_bm(cfg.kappa, 128, cfg.seed), ChainMode::tilted});
    items.push_back({"rw", sample_rw(cfg.kappa, 128, cfg.seed), ChainMode::tilted});
    for (const auto& it : items) {
      const Curve curve = simulate(build_chain(it.d, it.mode), cfg.m, cfg.threads);
      const auto rep = diag::check_oscillation(curve, it.d);
      record("oscillation_bounds_" + it.name, rep.pass, rep.to_json());
    }
  }

  // JRW bound: worked example plus random constant pairs
  {
    const auto worked =
        diag::check_jrw(zero_driver(8), const_driver(0.1, 8), Complex(0.0, 1.0), 1.0,
                        ode_options(cfg));
    record("jrw_worked_example", worked.pass, worked.to_json());
    Rng rng(derive_seed(cfg.seed, 7));
    bool all = true;
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < cfg.jrw_pairs; ++i) {
      const double v1 = rng.uniform(-1.0, 1.0);
      const double v2 = v1 + rng.uniform(-0.2, 0.2);
      const Complex u(rng.uniform(-1.0, 1.0), rng.uniform(0.5, 2.0));
      const double T = rng.uniform(0.25, 1.0);
      const auto rep = diag::check_jrw(const_driver(v1, 8), const_driver(v2, 8), u, T,
                                       ode_options(cfg));
      all = all && rep.pass;
      worst = std::min(worst, rep.slack);
    }
    record("jrw_random_constant_pairs(" + std::to_string(cfg.jrw_pairs) + ")", all,
           {{"worst_slack", worst}});
  }

  // hcap <= C diam * height ratios
  {
    const auto zero_rep = diag::check_hcap_diam(zero_driver(64), 1.0, cfg.m, cfg.threads);
    const bool zero_ok = zero_rep.pass && std::abs(zero_rep.ratio - 0.25) < 1e-6;
    record("hcap_diam_zero_ratio_0.25", zero_ok, zero_rep.to_json());
    const auto sq = diag::check_hcap_diam(sqrt_driver(2.0, 64), 1.0, cfg.m, cfg.threads);
    record("hcap_diam_sqrt_c2", sq.pass, sq.to_json());
    const auto bm = diag::check_hcap_diam(sample_bm(cfg.kappa, 64, cfg.seed), 1.0, cfg.m,
                                          cfg.threads);
    record("hcap_diam_bm", bm.pass, bm.to_json());
  }

  // kappa <-> a roundtrip
  {
    Rng rng(derive_seed(cfg.seed, 11));
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const double kappa = rng.uniform(0.0, 16.0);
      const double back = a_to_kappa(kappa_to_a(kappa));
      worst = std::max(worst, std::abs(back - kappa) / std::max(1.0, kappa));
    }
    record("kappa_to_a_roundtrip", worst <= 1e-12, {{"worst_rel_err", worst}});
  }

  if (!cfg.json_path.empty())
    detail::write_text_atomic(cfg.json_path, results.dump(2) + "\n");
  std::cout << (all_pass ? "all checks passed" : "CHECK VIOLATION") << "\n";
  return all_pass ? kOk : kCheckViolation;
}

} // namespace loewner::cli
