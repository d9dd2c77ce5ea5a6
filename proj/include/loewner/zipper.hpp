#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "loewner/driver.hpp"
#include "loewner/parallel.hpp"
#include "loewner/slitmap.hpp"

namespace loewner {

enum class ChainMode { tilted, vertical };

inline const char* to_string(ChainMode m) { return m == ChainMode::tilted ? "tilted" : "vertical"; }

// Per-step slit maps realizing fhat^n at the grid times.
//
// With G_k = (fhat_{t_k})^{-1} o fhat_{t_{k+1}} and fhat_{t_0} = id + values[0],
// induction gives fhat_{t_k} = G_0 o G_1 o ... o G_{k-1}: the step maps apply
// newest-first, G_{k-1} innermost.
struct ZipperChain {
  double dt = 0.0;
  ChainMode mode = ChainMode::tilted;
  SampledDriver driver;
  std::vector<SlitParams> steps;   // tilted mode: one per step
  std::vector<double> dlambdas;    // both modes: driver increments
  SlitParams vslit{};              // vertical mode: the shared symmetric slit

  int n() const { return driver.n; }
};

inline ZipperChain build_chain(const SampledDriver& d, ChainMode mode) {
  d.validate();
  ZipperChain ch;
  ch.dt = d.dt();
  ch.mode = mode;
  ch.driver = d;
  ch.driver.mode = (mode == ChainMode::tilted) ? InterpMode::sqrt_interp : InterpMode::vertical_step;
  ch.dlambdas.resize(static_cast<std::size_t>(d.n));
  for (int k = 0; k < d.n; ++k) ch.dlambdas[static_cast<std::size_t>(k)] = d.dlambda(k);
  if (mode == ChainMode::tilted) {
    ch.steps.reserve(static_cast<std::size_t>(d.n));
    for (int k = 0; k < d.n; ++k)
      ch.steps.push_back(params_from_step(ch.dlambdas[static_cast<std::size_t>(k)], ch.dt));
  } else {
    ch.vslit = params_from_step(0.0, ch.dt);
  }
  return ch;
}

// Step map k. Vertical mode: G_k(z) = sqrt((z + dlambda_k)^2 - 4 dt), the
// composition form of the vertical slit map with the driver's jump folded in.
inline Complex apply_step(const ZipperChain& ch, int k, Complex z) {
  if (ch.mode == ChainMode::tilted) return eval_tilted(ch.steps[static_cast<std::size_t>(k)], z);
  return eval_tilted(ch.vslit, z + ch.dlambdas[static_cast<std::size_t>(k)]);
}

// fhat_{t_k}(z) = f_{t_k}(z + lambda^n(t_k)): the first k step maps applied
// newest-first, then the base offset.
inline Complex fhat(const ZipperChain& ch, int k, Complex z) {
  if (k < 0 || k > ch.n()) throw std::out_of_range("fhat: k out of range");
  if (z.imag() < 0.0) throw std::domain_error("fhat: z in lower half plane");
  for (int j = k - 1; j >= 0; --j) z = apply_step(ch, j, z);
  return z + ch.driver.values[0];
}

// gamma^n(t) for t in [t_k, t_{k+1}): the partial-capacity tip along the
// step's ray (same alpha, capacity s = t - t_k) pushed through fhat_{t_k}.
inline Complex curve_point(const ZipperChain& ch, double t) {
  if (ch.mode != ChainMode::tilted)
    throw std::logic_error("curve_point: interior samples require tilted mode");
  if (!(t >= 0.0) || t > 1.0) throw std::domain_error("curve_point: t outside [0,1]");
  int k = static_cast<int>(std::floor(t * ch.n()));
  if (k >= ch.n()) k = ch.n() - 1;  // t == 1 falls into the last step
  const double s = t - ch.driver.time(k);
  Complex z(0.0, 0.0);
  if (s > 0.0)
    z = tip(params_from_step(ch.dlambdas[static_cast<std::size_t>(k)] * std::sqrt(s / ch.dt), s));
  return fhat(ch, k, z);
}

// Time-parametrized samples of the simulated curve (half-plane capacity).
struct Curve {
  std::vector<double> times;
  std::vector<Complex> points;
  bool polyline = false;  // vertical mode: grid tips meant to be joined by lines
};

// Tilted mode: m interior points per step, n*m+1 samples, O(n^2 m) map
// applications. Vertical mode: the n+1 grid tips only, flagged as a polyline.
inline Curve simulate(const ZipperChain& ch, int m, unsigned threads = 0) {
  if (m < 1) throw std::invalid_argument("simulate: m must be >= 1");
  Curve c;
  if (ch.mode == ChainMode::vertical) {
    const int n = ch.n();
    c.polyline = true;
    c.times.resize(static_cast<std::size_t>(n) + 1);
    c.points.resize(static_cast<std::size_t>(n) + 1);
    parallel_for(static_cast<std::size_t>(n) + 1, [&](std::size_t k) {
      c.times[k] = ch.driver.time(static_cast<int>(k));
      c.points[k] = fhat(ch, static_cast<int>(k), Complex(0.0, 0.0));
    }, threads);
    return c;
  }
  const long total = static_cast<long>(ch.n()) * m;
  c.times.resize(static_cast<std::size_t>(total) + 1);
  c.points.resize(static_cast<std::size_t>(total) + 1);
  parallel_for(static_cast<std::size_t>(total) + 1, [&](std::size_t j) {
    const double t = static_cast<double>(j) / static_cast<double>(total);
    c.times[j] = t;
    c.points[j] = curve_point(ch, t);
  }, threads);
  return c;
}

} // namespace loewner
