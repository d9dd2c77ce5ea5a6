#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "loewner/ode.hpp"
#include "loewner/rng.hpp"
#include "loewner/zipper.hpp"

namespace loewner::diag {

using nlohmann::json;

// Theorem-rate exponent rho(beta) = (1/2)(1 - sqrt((1+beta)/2)).
inline double rho_from_beta(double beta) {
  return 0.5 * (1.0 - std::sqrt((1.0 + beta) / 2.0));
}

// ---------------------------------------------------------------------------
// Sup-norm distance on a shared capacity-time grid. Both curves must carry
// samples at exactly the grid times (their owners resample them there).
// ---------------------------------------------------------------------------
inline double supnorm_distance(const Curve& A, const Curve& B, const std::vector<double>& grid) {
  auto sample = [](const Curve& c, double t) -> Complex {
    const auto it = std::lower_bound(c.times.begin(), c.times.end(), t - 1e-12);
    if (it == c.times.end() || std::abs(*it - t) > 1e-12)
      throw std::invalid_argument("supnorm_distance: curve not sampled at grid time");
    return c.points[static_cast<std::size_t>(it - c.times.begin())];
  };
  double m = 0.0;
  for (double t : grid) m = std::max(m, std::abs(sample(A, t) - sample(B, t)));
  return m;
}

// ---------------------------------------------------------------------------
// Oscillation bounds on curves: every point z = gamma(t) must satisfy
// |Re z - base| <= sup_{[0,t]} lambda - inf_{[0,t]} lambda and Im z <= 2 sqrt(t).
// The driver sup uses grid prefix extrema plus the interpolated value at t
// itself (the interpolation is monotone inside each cell, so this is exact).
// ---------------------------------------------------------------------------
struct OscReport {
  bool pass = true;
  double worst_re_slack = std::numeric_limits<double>::infinity();
  double worst_im_slack = std::numeric_limits<double>::infinity();
  double tol = 1e-9;
  double offending_t = std::numeric_limits<double>::quiet_NaN();
  Complex offending_point{0.0, 0.0};

  json to_json() const {
    return json{{"name", "oscillation_bounds"},
                {"pass", pass},
                {"worst_re_slack", worst_re_slack},
                {"worst_im_slack", worst_im_slack},
                {"tol", tol},
                {"offending_t", pass ? json(nullptr) : json(offending_t)},
                {"offending_point", pass ? json(nullptr)
                                         : json{offending_point.real(), offending_point.imag()}}};
  }
};

inline OscReport check_oscillation(const Curve& curve, const SampledDriver& d, double tol = 1e-9) {
  d.validate();
  if (curve.times.size() != curve.points.size() || curve.times.empty())
    throw std::invalid_argument("check_oscillation: malformed curve");
  const std::size_t nv = d.values.size();
  std::vector<double> pmax(nv), pmin(nv);
  pmax[0] = pmin[0] = d.values[0];
  for (std::size_t k = 1; k < nv; ++k) {
    pmax[k] = std::max(pmax[k - 1], d.values[k]);
    pmin[k] = std::min(pmin[k - 1], d.values[k]);
  }
  OscReport rep;
  rep.tol = tol;
  const double base = d.values[0];
  for (std::size_t i = 0; i < curve.times.size(); ++i) {
    const double t = curve.times[i];
    const Complex z = curve.points[i];
    const int k = d.cell_of(t);
    const double lam_t = d.eval(t);
    const double hi = std::max(pmax[static_cast<std::size_t>(k)], lam_t);
    const double lo = std::min(pmin[static_cast<std::size_t>(k)], lam_t);
    const double re_slack = (hi - lo) - std::abs(z.real() - base);
    const double im_slack = 2.0 * std::sqrt(t) - z.imag();
    if (re_slack < rep.worst_re_slack) rep.worst_re_slack = re_slack;
    if (im_slack < rep.worst_im_slack) rep.worst_im_slack = im_slack;
    if ((re_slack < -tol || im_slack < -tol) && rep.pass) {
      rep.pass = false;
      rep.offending_t = t;
      rep.offending_point = z;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Im G(iy) must increase on (0, inf) for every admissible slit map. Random
// params sweep c = dlambda/sqrt(dt) uniform in [-10, 10] and dt log-uniform
// in [1e-6, 1]; y runs over a 100-point log grid in [1e-6, 1e3].
// The evaluator is injectable so a corrupted map can serve as a negative
// control for the checker itself.
// ---------------------------------------------------------------------------
struct MonotoneReport {
  bool pass = true;
  int trials = 0;
  double worst_gap = std::numeric_limits<double>::infinity();
  int violations = 0;
  SlitParams offending{};

  json to_json() const {
    return json{{"name", "G_imag_monotone"},
                {"pass", pass},
                {"trials", trials},
                {"worst_gap", worst_gap},
                {"violations", violations}};
  }
};

template <class Eval>
MonotoneReport check_G_monotone_impl(int trials, std::uint64_t seed, Eval&& ev, int grid_points = 100) {
  if (trials < 1) throw std::invalid_argument("check_G_monotone: trials must be >= 1");
  MonotoneReport rep;
  rep.trials = trials;
  Rng rng(seed);
  const double y_lo = 1e-6, y_hi = 1e3;
  std::vector<double> ys(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i)
    ys[static_cast<std::size_t>(i)] =
        y_lo * std::pow(y_hi / y_lo, static_cast<double>(i) / (grid_points - 1));
  for (int trial = 0; trial < trials; ++trial) {
    const double dt = std::pow(10.0, rng.uniform(-6.0, 0.0));
    const double c = rng.uniform(-10.0, 10.0);
    const SlitParams p = params_from_step(c * std::sqrt(dt), dt);
    double prev = ev(p, Complex(0.0, ys[0])).imag();
    for (std::size_t i = 1; i < ys.size(); ++i) {
      const double cur = ev(p, Complex(0.0, ys[i])).imag();
      const double gap = cur - prev;
      if (gap < rep.worst_gap) rep.worst_gap = gap;
      if (!(gap > 0.0)) {
        ++rep.violations;
        if (rep.pass) {
          rep.pass = false;
          rep.offending = p;
        }
      }
      prev = cur;
    }
  }
  return rep;
}

inline MonotoneReport check_G_monotone(int trials, std::uint64_t seed) {
  return check_G_monotone_impl(trials, seed,
                               [](const SlitParams& p, Complex z) { return eval_tilted(p, z); });
}

// ---------------------------------------------------------------------------
// Perturbation bound (JRW): with eps = sup_{[0,T]} |W1 - W2| and I = sqrt(4T+y^2),
//   |f1_T(u) - f2_T(u)| <= eps * exp{ (1/2) sqrt(log(I|f1'|/y) log(I|f2'|/y))
//                                     + log log(I/y) }.
// Both sides are recomputed numerically: the values by two upward solves with
// reversed drivers, the derivatives by the variational flow.
// ---------------------------------------------------------------------------
struct JrwReport {
  double lhs = 0.0, rhs = 0.0, eps = 0.0;
  double f1p = 0.0, f2p = 0.0;
  Complex f1{0.0, 0.0}, f2{0.0, 0.0};
  bool pass = true;
  double slack = 0.0;

  json to_json() const {
    return json{{"name", "jrw_perturbation_bound"}, {"pass", pass},   {"lhs", lhs},
                {"rhs", rhs},                       {"eps", eps},     {"f1_prime", f1p},
                {"f2_prime", f2p},                  {"slack", slack}};
  }
};

inline JrwReport check_jrw(const SampledDriver& W1, const SampledDriver& W2, Complex u, double T,
                           const ode::Options& opt = {}) {
  W1.validate();
  W2.validate();
  if (!(u.imag() > 0.0)) throw std::domain_error("check_jrw: need Im u > 0");
  if (!(T >= 0.0) || T > 1.0) throw std::domain_error("check_jrw: need 0 <= T <= 1");
  JrwReport rep;
  // sup over a dense grid; exact for the constant drivers the suite uses
  const int cells = std::max(W1.n, W2.n);
  const int per_cell = 8;
  for (int j = 0; j <= cells * per_cell; ++j) {
    const double s = T * static_cast<double>(j) / (cells * per_cell);
    rep.eps = std::max(rep.eps, std::abs(W1.eval(s) - W2.eval(s)));
  }
  const ode::MapDeriv m1 = ode::inverse_with_derivative(W1, T, u, opt);
  const ode::MapDeriv m2 = ode::inverse_with_derivative(W2, T, u, opt);
  if (m1.meta.failed() || m2.meta.failed()) throw ode::SolverError("check_jrw: integration failed");
  rep.f1 = m1.value;
  rep.f2 = m2.value;
  rep.f1p = std::abs(m1.deriv);
  rep.f2p = std::abs(m2.deriv);
  rep.lhs = std::abs(m1.value - m2.value);
  const double y = u.imag();
  const double I = std::sqrt(4.0 * T + y * y);
  const double L1 = std::log(I * rep.f1p / y);
  const double L2 = std::log(I * rep.f2p / y);
  const double gm = std::sqrt(std::max(0.0, L1 * L2));
  rep.rhs = rep.eps * std::exp(0.5 * gm + std::log(std::log(I / y)));
  rep.pass = rep.lhs <= rep.rhs * (1.0 + 1e-6);
  rep.slack = rep.rhs * (1.0 + 1e-6) - rep.lhs;
  return rep;
}

// ---------------------------------------------------------------------------
// hcap(K) <= C diam(K) height(K) sanity ratio, with hcap = t (capacity time)
// and diam/height estimated from curve samples.
// ---------------------------------------------------------------------------
struct HcapReport {
  double t = 0.0, diam = 0.0, height = 0.0, ratio = 0.0;
  bool pass = true;

  json to_json() const {
    return json{{"name", "hcap_diam_height"}, {"pass", pass},     {"t", t},
                {"diam", diam},               {"height", height}, {"ratio", ratio}};
  }
};

inline HcapReport check_hcap_diam(const SampledDriver& d, double t, int m = 4,
                                  unsigned threads = 0) {
  d.validate();
  if (!(t > 0.0) || t > 1.0) throw std::domain_error("check_hcap_diam: need 0 < t <= 1");
  const ZipperChain ch = build_chain(d, ChainMode::tilted);
  const Curve c = simulate(ch, m, threads);
  std::vector<Complex> pts;
  for (std::size_t i = 0; i < c.times.size(); ++i)
    if (c.times[i] <= t + 1e-12) pts.push_back(c.points[i]);
  HcapReport rep;
  rep.t = t;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    rep.height = std::max(rep.height, pts[i].imag());
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      rep.diam = std::max(rep.diam, std::abs(pts[i] - pts[j]));
  }
  rep.ratio = (rep.diam > 0.0 && rep.height > 0.0) ? t / (rep.diam * rep.height) : 0.0;
  rep.pass = rep.ratio > 0.0 && rep.ratio <= 10.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Polyline self-intersection sweep over consecutive curve samples. Segments
// sorted by xmin; only x-overlapping pairs are tested; neighbors sharing an
// endpoint are skipped.
// ---------------------------------------------------------------------------
struct SimpleReport {
  bool simple = true;
  std::size_t seg_a = 0, seg_b = 0;
  long pairs_tested = 0;

  json to_json() const {
    return json{{"name", "simple_curve_sweep"},
                {"pass", simple},
                {"pairs_tested", pairs_tested},
                {"seg_a", seg_a},
                {"seg_b", seg_b}};
  }
};

namespace detail {

inline int orient(const Complex& a, const Complex& b, const Complex& c) {
  const double v = (b.real() - a.real()) * (c.imag() - a.imag()) -
                   (b.imag() - a.imag()) * (c.real() - a.real());
  return (v > 0.0) - (v < 0.0);
}

inline bool on_segment(const Complex& a, const Complex& b, const Complex& c) {
  return std::min(a.real(), b.real()) <= c.real() && c.real() <= std::max(a.real(), b.real()) &&
         std::min(a.imag(), b.imag()) <= c.imag() && c.imag() <= std::max(a.imag(), b.imag());
}

inline bool segments_intersect(const Complex& p1, const Complex& q1, const Complex& p2,
                               const Complex& q2) {
  const int o1 = orient(p1, q1, p2);
  const int o2 = orient(p1, q1, q2);
  const int o3 = orient(p2, q2, p1);
  const int o4 = orient(p2, q2, q1);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, q1, p2)) return true;
  if (o2 == 0 && on_segment(p1, q1, q2)) return true;
  if (o3 == 0 && on_segment(p2, q2, p1)) return true;
  if (o4 == 0 && on_segment(p2, q2, q1)) return true;
  return false;
}

} // namespace detail

inline SimpleReport check_simple(const Curve& c) {
  SimpleReport rep;
  const std::size_t np = c.points.size();
  if (np < 3) return rep;
  struct Seg {
    double xmin, xmax;
    std::size_t idx;
  };
  std::vector<Seg> segs;
  segs.reserve(np - 1);
  for (std::size_t i = 0; i + 1 < np; ++i) {
    if (c.points[i] == c.points[i + 1]) continue;  // zero-length
    segs.push_back({std::min(c.points[i].real(), c.points[i + 1].real()),
                    std::max(c.points[i].real(), c.points[i + 1].real()), i});
  }
  std::sort(segs.begin(), segs.end(), [](const Seg& a, const Seg& b) { return a.xmin < b.xmin; });
  for (std::size_t a = 0; a < segs.size(); ++a) {
    for (std::size_t b = a + 1; b < segs.size() && segs[b].xmin <= segs[a].xmax; ++b) {
      const std::size_t i = segs[a].idx, j = segs[b].idx;
      if (i + 1 == j || j + 1 == i) continue;  // shared endpoint
      ++rep.pairs_tested;
      if (detail::segments_intersect(c.points[i], c.points[i + 1], c.points[j], c.points[j + 1])) {
        rep.simple = false;
        rep.seg_a = std::min(i, j);
        rep.seg_b = std::max(i, j);
        return rep;
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Derivative-growth fit: least squares of log max_t |fhat'_t(iy)| against
// -log y, slope clamped to [0,1). c0 is chosen so the fitted bound covers
// every sampled point.
// ---------------------------------------------------------------------------
struct BetaFit {
  double beta_est = 0.0;
  double c0_est = 0.0;
  double y0 = 0.0;
  double residual = 0.0;
  std::vector<double> y_grid;
  std::vector<double> max_fprime;

  json to_json() const {
    return json{{"beta_est", beta_est}, {"c0_est", c0_est},          {"y0", y0},
                {"residual", residual}, {"y_grid", y_grid},          {"max_fprime", max_fprime}};
  }
};

inline BetaFit estimate_beta(const SampledDriver& d, const std::vector<double>& t_grid,
                             const std::vector<double>& y_grid, const ode::Options& opt = {},
                             unsigned threads = 0) {
  d.validate();
  if (t_grid.empty() || y_grid.size() < 2)
    throw std::invalid_argument("estimate_beta: degenerate grid");
  for (double y : y_grid)
    if (!(y > 0.0)) throw std::invalid_argument("estimate_beta: y grid must be positive");
  const std::size_t nt = t_grid.size(), ny = y_grid.size();
  std::vector<double> fp(nt * ny);
  parallel_for(nt * ny, [&](std::size_t idx) {
    const std::size_t it = idx / ny, iy = idx % ny;
    fp[idx] = ode::fhat_prime(d, t_grid[it], y_grid[iy], opt);
  }, threads);
  BetaFit fit;
  fit.y_grid = y_grid;
  fit.max_fprime.assign(ny, 0.0);
  for (std::size_t it = 0; it < nt; ++it)
    for (std::size_t iy = 0; iy < ny; ++iy)
      fit.max_fprime[iy] = std::max(fit.max_fprime[iy], fp[it * ny + iy]);
  fit.y0 = *std::max_element(y_grid.begin(), y_grid.end());
  // OLS of log M against -log y
  double sx = 0, sz = 0, sxx = 0, sxz = 0;
  for (std::size_t i = 0; i < ny; ++i) {
    const double x = -std::log(y_grid[i]);
    const double z = std::log(fit.max_fprime[i]);
    if (!std::isfinite(x) || !std::isfinite(z))
      throw std::invalid_argument("estimate_beta: degenerate data");
    sx += x;
    sz += z;
    sxx += x * x;
    sxz += x * z;
  }
  const double nn = static_cast<double>(ny);
  const double var = sxx - sx * sx / nn;
  if (!(var > 0.0)) throw std::invalid_argument("estimate_beta: degenerate y grid");
  double slope = (sxz - sx * sz / nn) / var;
  slope = std::clamp(slope, 0.0, 1.0 - 1e-9);
  fit.beta_est = slope;
  fit.c0_est = 0.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < ny; ++i) {
    fit.c0_est = std::max(fit.c0_est, fit.max_fprime[i] * std::pow(y_grid[i], slope));
    const double pred = (sz - slope * sx) / nn + slope * (-std::log(y_grid[i]));
    const double r = std::log(fit.max_fprime[i]) - pred;
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / nn);
  return fit;
}

// ---------------------------------------------------------------------------
// Coupled convergence study. Brownian levels are refined from one path via
// refine_bridge (the coarse grid is a bit-exact restriction of the fine one);
// deterministic families are resampled exactly. d_n is the sup-norm distance
// of gamma^n and gamma^{2n} on level n's own sample times.
// ---------------------------------------------------------------------------
struct StudyConfig {
  std::string family = "bm";  // bm | sqrt | zero
  double kappa = 2.0;
  double c = 1.0;
  int n0 = 100;
  int doublings = 3;
  int m = 2;
  std::uint64_t seed = 1;
  ode::Options ode_opt{};
  unsigned threads = 0;
};

struct ConvergenceReport {
  StudyConfig config;
  std::vector<int> levels;
  std::vector<double> d_n;
  double rho_fit = 0.0;
  double rho_residual = 0.0;
  bool exact = false;  // all d_n vanished (interpolation reproduces lambda)
  BetaFit beta;
  double rho_of_beta = 0.0;
  std::vector<double> wall_times_sec;

  json to_json() const {
    json j{{"family", config.family},
           {"kappa", config.kappa},
           {"c", config.c},
           {"n0", config.n0},
           {"doublings", config.doublings},
           {"m", config.m},
           {"seed", config.seed},
           {"rng", Rng::kName},
           {"levels", levels},
           {"d_n", d_n},
           {"rho_fit", rho_fit},
           {"rho_residual", rho_residual},
           {"exact", exact},
           {"beta", beta.to_json()},
           {"rho_of_beta_est", rho_of_beta},
           {"wall_times_sec", wall_times_sec},
           {"tolerances",
            json{{"ode_rel_tol", config.ode_opt.rel_tol},
                 {"ode_abs_tol", config.ode_opt.abs_tol},
                 {"supnorm_grid", "coarser level's sample times"}}}};
    return j;
  }
};

inline ConvergenceReport convergence_study(const StudyConfig& cfg) {
  if (cfg.n0 < 16) throw std::invalid_argument("convergence_study: n0 must be >= 16");
  if (cfg.doublings < 2) throw std::invalid_argument("convergence_study: doublings must be >= 2");
  if (cfg.m < 1) throw std::invalid_argument("convergence_study: m must be >= 1");
  ConvergenceReport rep;
  rep.config = cfg;

  std::vector<SampledDriver> drivers;
  drivers.reserve(static_cast<std::size_t>(cfg.doublings) + 1);
  if (cfg.family == "bm") {
    drivers.push_back(sample_bm(cfg.kappa, cfg.n0, cfg.seed));
    for (int j = 1; j <= cfg.doublings; ++j)
      drivers.push_back(refine_bridge(drivers.back(), derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(j))));
  } else if (cfg.family == "sqrt") {
    for (int j = 0; j <= cfg.doublings; ++j) drivers.push_back(sqrt_driver(cfg.c, cfg.n0 << j));
  } else if (cfg.family == "zero") {
    for (int j = 0; j <= cfg.doublings; ++j) drivers.push_back(zero_driver(cfg.n0 << j));
  } else {
    throw std::invalid_argument("convergence_study: unknown family " + cfg.family);
  }
  // coupling invariant: coarse values are bit-exact restrictions
  for (std::size_t j = 0; j + 1 < drivers.size(); ++j)
    for (int k = 0; k <= drivers[j].n; ++k)
      if (drivers[j].values[static_cast<std::size_t>(k)] !=
          drivers[j + 1].values[static_cast<std::size_t>(2 * k)])
        throw std::logic_error("convergence_study: coupling violated");

  std::vector<Curve> curves;
  curves.reserve(drivers.size());
  for (const auto& d : drivers) {
    const auto t0 = std::chrono::steady_clock::now();
    curves.push_back(simulate(build_chain(d, ChainMode::tilted), cfg.m, cfg.threads));
    const auto t1 = std::chrono::steady_clock::now();
    rep.levels.push_back(d.n);
    rep.wall_times_sec.push_back(std::chrono::duration<double>(t1 - t0).count());
  }

  for (std::size_t j = 0; j + 1 < curves.size(); ++j)
    rep.d_n.push_back(supnorm_distance(curves[j], curves[j + 1], curves[j].times));

  // OLS of log d against log n over the positive distances
  double sx = 0, sz = 0, sxx = 0, sxz = 0;
  int npos = 0;
  for (std::size_t j = 0; j < rep.d_n.size(); ++j) {
    if (!(rep.d_n[j] > 0.0)) continue;
    const double x = std::log(static_cast<double>(rep.levels[j]));
    const double z = std::log(rep.d_n[j]);
    sx += x;
    sz += z;
    sxx += x * x;
    sxz += x * z;
    ++npos;
  }
  if (npos >= 2) {
    const double var = sxx - sx * sx / npos;
    const double slope = (sxz - sx * sz / npos) / var;
    rep.rho_fit = -slope;
    double ss = 0.0;
    for (std::size_t j = 0; j < rep.d_n.size(); ++j) {
      if (!(rep.d_n[j] > 0.0)) continue;
      const double x = std::log(static_cast<double>(rep.levels[j]));
      const double pred = (sz - slope * sx) / npos + slope * x;
      const double r = std::log(rep.d_n[j]) - pred;
      ss += r * r;
    }
    rep.rho_residual = std::sqrt(ss / npos);
  } else {
    rep.exact = true;
  }

  // derivative-growth estimate on the coarsest driver, y0 = 1/sqrt(n0)
  {
    const double y0 = 1.0 / std::sqrt(static_cast<double>(cfg.n0));
    std::vector<double> tg, yg;
    for (int i = 0; i <= 10; ++i) tg.push_back(i / 10.0);
    const int ny = 8;
    for (int i = 0; i < ny; ++i)
      yg.push_back(y0 / 8.0 * std::pow(8.0, static_cast<double>(i) / (ny - 1)));
    rep.beta = estimate_beta(drivers.front(), tg, yg, cfg.ode_opt, cfg.threads);
    rep.rho_of_beta = rho_from_beta(rep.beta.beta_est);
  }
  return rep;
}

} // namespace loewner::diag
