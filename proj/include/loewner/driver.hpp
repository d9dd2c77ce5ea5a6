#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "loewner/detail/atomic_file.hpp"
#include "loewner/rng.hpp"

namespace loewner {

// How grid samples are turned back into a function of t.
//   sqrt_interp:   lambda^n(t) = sqrt(n) (lambda_{k+1}-lambda_k) sqrt(t-t_k) + lambda_k
//   vertical_step: lambda^n(t) = lambda_k on [t_k, t_{k+1})
enum class InterpMode { sqrt_interp, vertical_step };

inline const char* to_string(InterpMode m) {
  return m == InterpMode::sqrt_interp ? "sqrt-interp" : "vertical-step";
}

struct Provenance {
  std::string kind;    // bm | rw | sqrt | zero | file | perturbed
  double kappa = 0.0;
  double c = 0.0;
  std::uint64_t seed = 0;
  std::string rng;     // generator name when randomness was used
  std::vector<std::uint64_t> refine_seeds;
  std::string source;  // input path / parent description
};

// Driving-function samples on the uniform grid t_k = k/n of [0,1].
// values[0] is the curve's base point; every built-in generator starts at 0.
struct SampledDriver {
  int n = 0;
  std::vector<double> values;  // n+1 entries
  InterpMode mode = InterpMode::sqrt_interp;
  Provenance prov;

  double dt() const { return 1.0 / n; }
  double time(int k) const { return static_cast<double>(k) / n; }
  double dlambda(int k) const { return values[static_cast<std::size_t>(k) + 1] - values[static_cast<std::size_t>(k)]; }

  int cell_of(double t) const {
    int k = static_cast<int>(std::floor(t * n));
    return std::clamp(k, 0, n - 1);
  }

  // lambda^n restricted to cell k, valid on the closed cell (one-sided limits
  // at breakpoints are the caller's choice of k).
  double eval_cell(int k, double t) const {
    const double s = std::max(0.0, t - time(k));
    if (mode == InterpMode::vertical_step) return values[static_cast<std::size_t>(k)];
    return values[static_cast<std::size_t>(k)] + dlambda(k) * std::sqrt(s * n);
  }

  double eval(double t) const { return eval_cell(cell_of(t), t); }

  void validate() const {
    if (n < 1) throw std::invalid_argument("SampledDriver: n must be >= 1");
    if (values.size() != static_cast<std::size_t>(n) + 1)
      throw std::invalid_argument("SampledDriver: values must have n+1 entries");
    for (double v : values)
      if (!std::isfinite(v)) throw std::invalid_argument("SampledDriver: non-finite value");
  }
};

// ---------------------------------------------------------------------------
// Generators. All are pure functions of (parameters, seed).
// ---------------------------------------------------------------------------

// lambda(t_k) = sqrt(kappa) * B_{t_k}; increments are iid N(0, kappa/n).
inline SampledDriver sample_bm(double kappa, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_bm: n must be >= 1");
  if (kappa < 0.0) throw std::invalid_argument("sample_bm: kappa must be >= 0");
  SampledDriver d;
  d.n = n;
  d.values.resize(static_cast<std::size_t>(n) + 1);
  d.values[0] = 0.0;
  Rng rng(seed);
  const double sigma = std::sqrt(kappa / n);
  for (int k = 1; k <= n; ++k)
    d.values[static_cast<std::size_t>(k)] = d.values[static_cast<std::size_t>(k) - 1] + sigma * rng.gauss();
  d.prov = {"bm", kappa, 0.0, seed, Rng::kName, {}, ""};
  return d;
}

// Brownian-bridge midpoint refinement: even indices keep the coarse values
// bit-exactly; each midpoint is the neighbor average plus N(0, kappa*(1/n)/4).
// Coupling between gamma^n and gamma^{2n} in convergence studies rests on the
// bit-exact restriction, so the coarse array is copied, never recomputed.
inline SampledDriver refine_bridge(const SampledDriver& d, std::uint64_t seed) {
  d.validate();
  if (d.prov.kind != "bm")
    throw std::invalid_argument("refine_bridge: driver was not produced by sample_bm");
  const int n = d.n;
  SampledDriver out;
  out.n = 2 * n;
  out.values.resize(static_cast<std::size_t>(2 * n) + 1);
  out.mode = d.mode;
  Rng rng(seed);
  const double sigma = std::sqrt(d.prov.kappa * d.dt() / 4.0);
  for (int k = 0; k < n; ++k) {
    const double a = d.values[static_cast<std::size_t>(k)];
    const double b = d.values[static_cast<std::size_t>(k) + 1];
    out.values[static_cast<std::size_t>(2 * k)] = a;
    out.values[static_cast<std::size_t>(2 * k) + 1] = 0.5 * (a + b) + sigma * rng.gauss();
  }
  out.values[static_cast<std::size_t>(2 * n)] = d.values[static_cast<std::size_t>(n)];
  out.prov = d.prov;
  out.prov.refine_seeds.push_back(seed);
  return out;
}

// lambda(t_k) = sqrt(kappa) S_k / sqrt(n), S_k a +-1 simple random walk.
inline SampledDriver sample_rw(double kappa, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_rw: n must be >= 1");
  if (kappa < 0.0) throw std::invalid_argument("sample_rw: kappa must be >= 0");
  SampledDriver d;
  d.n = n;
  d.values.resize(static_cast<std::size_t>(n) + 1);
  d.values[0] = 0.0;
  Rng rng(seed);
  const double step = std::sqrt(kappa) / std::sqrt(static_cast<double>(n));
  long s_k = 0;  // integer walk, so values[k] = S_k * step holds verbatim
  for (int k = 1; k <= n; ++k) {
    s_k += rng.sign();
    d.values[static_cast<std::size_t>(k)] = static_cast<double>(s_k) * step;
  }
  d.prov = {"rw", kappa, 0.0, seed, Rng::kName, {}, ""};
  return d;
}

// lambda(t_k) = c sqrt(t_k)
inline SampledDriver sqrt_driver(double c, int n) {
  if (n < 1) throw std::invalid_argument("sqrt_driver: n must be >= 1");
  SampledDriver d;
  d.n = n;
  d.values.resize(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k)
    d.values[static_cast<std::size_t>(k)] = c * std::sqrt(static_cast<double>(k) / n);
  d.prov.kind = "sqrt";
  d.prov.c = c;
  return d;
}

inline SampledDriver zero_driver(int n) {
  if (n < 1) throw std::invalid_argument("zero_driver: n must be >= 1");
  SampledDriver d;
  d.n = n;
  d.values.assign(static_cast<std::size_t>(n) + 1, 0.0);
  d.prov.kind = "zero";
  return d;
}

// Per-entry uniform perturbation of magnitude <= eps_max (Variant 1 input).
inline SampledDriver perturb(const SampledDriver& d, double eps_max, std::uint64_t seed) {
  d.validate();
  if (eps_max < 0.0) throw std::invalid_argument("perturb: eps_max must be >= 0");
  SampledDriver out = d;
  if (eps_max > 0.0) {
    Rng rng(seed);
    for (double& v : out.values) v += eps_max * rng.uniform(-1.0, 1.0);
  }
  out.prov.kind = "perturbed";
  out.prov.seed = seed;
  out.prov.rng = Rng::kName;
  out.prov.source = "perturb(" + d.prov.kind + ")";
  return out;
}

// ---------------------------------------------------------------------------
// File format: first line n, then n+1 values, one per line, full precision.
// ---------------------------------------------------------------------------

inline void save_driver(const SampledDriver& d, const std::string& path) {
  d.validate();
  std::string out;
  out.reserve(24 * d.values.size() + 16);
  out += std::to_string(d.n);
  out += '\n';
  for (double v : d.values) {
    out += detail::fmt17(v);
    out += '\n';
  }
  detail::write_text_atomic(path, out);
}

inline SampledDriver load_driver(const std::string& path, InterpMode mode) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_driver: cannot open " + path);
  long n = 0;
  if (!(in >> n) || n < 1) throw std::runtime_error("load_driver: malformed count line in " + path);
  SampledDriver d;
  d.n = static_cast<int>(n);
  d.values.resize(static_cast<std::size_t>(n) + 1);
  for (long k = 0; k <= n; ++k) {
    double v;
    if (!(in >> v)) throw std::runtime_error("load_driver: expected " + std::to_string(n + 1) +
                                             " values in " + path);
    if (!std::isfinite(v)) throw std::runtime_error("load_driver: non-finite entry in " + path);
    d.values[static_cast<std::size_t>(k)] = v;
  }
  d.mode = mode;
  d.prov.kind = "file";
  d.prov.source = path;
  return d;
}

// ---------------------------------------------------------------------------
// Measurements
// ---------------------------------------------------------------------------

// Grid oscillation: sup{|lambda(t_i)-lambda(t_j)| : |t_i-t_j| <= delta} over
// the sample grid. The continuum sup of Eq.-style oscillation is approximated
// by its grid restriction.
inline double osc(const SampledDriver& d, double delta) {
  d.validate();
  if (!(delta > 0.0) || delta > 1.0) throw std::invalid_argument("osc: need 0 < delta <= 1");
  const int n = d.n;
  const int w = std::min<long>(n, static_cast<long>(std::floor(delta * n + 1e-9)));
  if (w == 0) return 0.0;
  // sliding max-min over index windows of span w
  std::deque<int> hi, lo;
  double best = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double v = d.values[static_cast<std::size_t>(i)];
    while (!hi.empty() && d.values[static_cast<std::size_t>(hi.back())] <= v) hi.pop_back();
    hi.push_back(i);
    while (!lo.empty() && d.values[static_cast<std::size_t>(lo.back())] >= v) lo.pop_back();
    lo.push_back(i);
    while (hi.front() < i - w) hi.pop_front();
    while (lo.front() < i - w) lo.pop_front();
    best = std::max(best, d.values[static_cast<std::size_t>(hi.front())] -
                              d.values[static_cast<std::size_t>(lo.front())]);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Random-walk parametrization: kappa = 4(1-2a)^2 / (a(1-a)), a in (0, 1/2].
// ---------------------------------------------------------------------------

inline double kappa_to_a(double kappa) {
  if (kappa < 0.0) throw std::invalid_argument("kappa_to_a: kappa must be >= 0");
  // root <= 1/2 of (16+kappa) a^2 - (16+kappa) a + 4 = 0
  return 0.5 - 0.5 * std::sqrt(kappa / (kappa + 16.0));
}

inline double a_to_kappa(double a) {
  if (!(a > 0.0) || a > 0.5) throw std::invalid_argument("a_to_kappa: need a in (0, 1/2]");
  const double s = 1.0 - 2.0 * a;
  return 4.0 * s * s / (a * (1.0 - a));
}

} // namespace loewner
