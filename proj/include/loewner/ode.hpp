#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "loewner/driver.hpp"
#include "loewner/parallel.hpp"

namespace loewner::ode {

using Complex = std::complex<double>;

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double eps_blow = 1e-6;   // downward singularity guard radius
  long max_steps = 4000000;
};

enum class Status { ok, blown_up, step_underflow, max_steps_exceeded };

struct OdeResult {
  Complex value{0.0, 0.0};
  bool blown_up = false;
  double T_z = std::numeric_limits<double>::quiet_NaN();
  long steps_taken = 0;
  double error_estimate = 0.0;  // sum of accepted local error estimates
  double im_decrease = 0.0;     // worst per-accepted-step drop of Im (upward flows)
  Status status = Status::ok;

  bool failed() const {
    return status == Status::step_underflow || status == Status::max_steps_exceeded;
  }
};

namespace detail {

template <std::size_t N>
using State = std::array<Complex, N>;

inline constexpr double kTimeEps = 1e-15;

// Dormand-Prince 5(4) tableau.
inline constexpr double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9;
inline constexpr double A21 = 1.0 / 5;
inline constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
inline constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
inline constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                        A54 = -212.0 / 729;
inline constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247,
                        A64 = 49.0 / 176, A65 = -5103.0 / 18656;
inline constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192,
                        B5 = -2187.0 / 6784, B6 = 11.0 / 84;
inline constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920,
                        E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40;

template <std::size_t N>
bool finite(const State<N>& y) {
  for (const auto& v : y)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

// One embedded step. Returns false if any stage went non-finite; otherwise
// fills the 5th-order result and the scaled error estimate.
template <std::size_t N, class Rhs>
bool dopri5_step(Rhs&& f, double t, double h, const State<N>& y, State<N>& out, double& err,
                 const Options& opt) {
  State<N> k1, k2, k3, k4, k5, k6, k7, tmp;
  k1 = f(t, y);
  for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (A21 * k1[i]);
  k2 = f(t + C2 * h, tmp);
  for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
  k3 = f(t + C3 * h, tmp);
  for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
  k4 = f(t + C4 * h, tmp);
  for (std::size_t i = 0; i < N; ++i)
    tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
  k5 = f(t + C5 * h, tmp);
  for (std::size_t i = 0; i < N; ++i)
    tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
  k6 = f(t + h, tmp);
  for (std::size_t i = 0; i < N; ++i)
    out[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
  if (!finite(out)) return false;
  k7 = f(t + h, out);
  err = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const Complex e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] +
                           E7 * k7[i]);
    const double sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(out[i]));
    err = std::max(err, std::abs(e) / sc);
  }
  return std::isfinite(err);
}

inline double shrink_factor(double err) {
  const double f = 0.9 * std::pow(std::max(err, 1.0), -0.2);
  return std::clamp(f, 0.2, 0.9);
}

inline double grow_factor(double err) {
  if (err <= 0.0) return 5.0;
  const double f = 0.9 * std::pow(err, -0.2);
  return std::clamp(f, 1.0, 5.0);
}

inline double h_floor(double scale) { return 1e-14 * std::max(1.0, scale); }

// Upward flow over piecewise-smooth cells. xi(cell, s) is the driving term;
// state component 0 is h, optional component 1 carries dh/dz.
template <std::size_t N, class Xi>
Status upward_cells(Xi&& xi, const std::vector<double>& breaks, State<N>& y, const Options& opt,
                    OdeResult& meta) {
  for (std::size_t ci = 0; ci + 1 < breaks.size(); ++ci) {
    const double a = breaks[ci], b = breaks[ci + 1];
    auto rhs = [&](double t, const State<N>& s) {
      State<N> dy;
      const Complex q = s[0] - xi(ci, t);
      dy[0] = -2.0 / q;
      if constexpr (N >= 2) dy[1] = 2.0 * s[1] / (q * q);
      return dy;
    };
    double t = a;
    double h = b - a;
    while (b - t > kTimeEps * std::max(1.0, std::abs(b))) {
      if (meta.steps_taken >= opt.max_steps) return Status::max_steps_exceeded;
      const double rem = b - t;
      h = std::min(h, rem);
      const bool final_step = h >= rem * (1.0 - 1e-12);
      if (!final_step && h < h_floor(t)) return Status::step_underflow;
      State<N> ynew;
      double err = 0.0;
      ++meta.steps_taken;
      if (!dopri5_step(rhs, t, h, y, ynew, err, opt)) {
        h *= 0.5;
        continue;
      }
      if (err > 1.0) {
        h *= shrink_factor(err);
        continue;
      }
      meta.im_decrease = std::max(meta.im_decrease, y[0].imag() - ynew[0].imag());
      meta.error_estimate += err * (opt.abs_tol + opt.rel_tol * std::abs(ynew[0]));
      y = ynew;
      t += h;
      h *= grow_factor(err);
    }
  }
  return Status::ok;
}

// Downward flow with the blow-up guard. lam(cell, t) is the driving term.
// The step size is capped at 0.2*dist^2 so one step cannot leap across the
// singularity; inside the 10*eps_blow zone steps that would land below
// eps_blow from far out are bisected, and the first accepted point within
// eps_blow stops the flow with T_z at the current time (O(eps^2) time bias).
template <class Lam>
Status downward_cells(Lam&& lam, const std::vector<double>& breaks, Complex& g,
                      const Options& opt, OdeResult& meta) {
  using S1 = State<1>;
  for (std::size_t ci = 0; ci + 1 < breaks.size(); ++ci) {
    const double a = breaks[ci], b = breaks[ci + 1];
    auto rhs = [&](double t, const S1& s) {
      S1 dy;
      dy[0] = 2.0 / (s[0] - lam(ci, t));
      return dy;
    };
    double t = a;
    double h = b - a;
    while (b - t > kTimeEps * std::max(1.0, std::abs(b))) {
      if (meta.steps_taken >= opt.max_steps) return Status::max_steps_exceeded;
      const double dist = std::abs(g - lam(ci, t));
      if (dist <= opt.eps_blow) {
        meta.blown_up = true;
        meta.T_z = t;
        return Status::blown_up;
      }
      const double rem = b - t;
      h = std::min({h, rem, std::max(0.2 * dist * dist, 0.05 * opt.eps_blow * opt.eps_blow)});
      const bool final_step = h >= rem * (1.0 - 1e-12);
      if (!final_step && h < h_floor(t)) {
        if (dist <= 10.0 * opt.eps_blow) {
          meta.blown_up = true;
          meta.T_z = t;
          return Status::blown_up;
        }
        return Status::step_underflow;
      }
      S1 y{g}, ynew;
      double err = 0.0;
      ++meta.steps_taken;
      if (!dopri5_step(rhs, t, h, y, ynew, err, opt)) {
        h *= 0.5;
        continue;
      }
      if (err > 1.0) {
        h *= shrink_factor(err);
        continue;
      }
      const double dist_new = std::abs(ynew[0] - lam(ci, t + h));
      if (dist_new < opt.eps_blow && dist > 4.0 * opt.eps_blow && h > 4.0 * h_floor(t)) {
        h *= 0.5;  // came in too fast; bisect toward the guard
        continue;
      }
      meta.error_estimate += err * (opt.abs_tol + opt.rel_tol * std::abs(ynew[0]));
      g = ynew[0];
      t += h;
      if (dist_new <= opt.eps_blow) {
        meta.blown_up = true;
        meta.T_z = t;
        return Status::blown_up;
      }
      h *= grow_factor(err);
    }
  }
  return Status::ok;
}

inline void push_unique(std::vector<double>& v, double x) {
  if (v.empty() || x - v.back() > kTimeEps) v.push_back(x);
}

// cell boundaries of [0, T] induced by the driver grid
inline std::vector<double> forward_breaks(const SampledDriver& d, double T) {
  std::vector<double> b{0.0};
  for (int k = 1; k <= d.n; ++k) {
    const double tk = d.time(k);
    if (tk >= T - kTimeEps) break;
    push_unique(b, tk);
  }
  push_unique(b, T);
  if (b.size() < 2) b.push_back(T);  // T == 0: degenerate, loop below is empty
  return b;
}

// cell boundaries in s for xi(s) = lambda(T - s)
inline std::vector<double> reversed_breaks(const SampledDriver& d, double T) {
  std::vector<double> b{0.0};
  for (int k = d.n; k >= 0; --k) {
    const double tk = d.time(k);
    if (tk >= T - kTimeEps) continue;
    if (tk <= kTimeEps) break;
    push_unique(b, T - tk);
  }
  push_unique(b, T);
  if (b.size() < 2) b.push_back(T);
  return b;
}

} // namespace detail

// ---------------------------------------------------------------------------
// g_t(z0): downward Loewner flow dg/dt = 2/(g - lambda(t)), g_0 = z0.
// Declares blow-up when |g - lambda| first drops below eps_blow.
// ---------------------------------------------------------------------------
inline OdeResult solve_downward(const SampledDriver& d, Complex z0, double t,
                                const Options& opt = {}) {
  d.validate();
  if (!(z0.imag() > 0.0)) throw std::domain_error("solve_downward: need Im z0 > 0");
  if (!(t >= 0.0) || t > 1.0) throw std::domain_error("solve_downward: need 0 <= t <= 1");
  OdeResult res;
  res.value = z0;
  if (t == 0.0) return res;
  const auto breaks = detail::forward_breaks(d, t);
  auto lam = [&](std::size_t ci, double tt) {
    return d.eval_cell(d.cell_of(0.5 * (breaks[ci] + breaks[ci + 1])), tt);
  };
  Complex g = z0;
  res.status = detail::downward_cells(lam, breaks, g, opt, res);
  res.value = g;
  return res;
}

// ---------------------------------------------------------------------------
// h_T(z): upward Loewner flow dh/dt = -2/(h - xi(t)), h_0 = z, with xi the
// given driver interpolated per its mode.
// ---------------------------------------------------------------------------
inline OdeResult solve_upward(const SampledDriver& d, Complex z, double T,
                              const Options& opt = {}) {
  d.validate();
  if (z.imag() < 0.0) throw std::domain_error("solve_upward: need Im z >= 0");
  if (!(T >= 0.0) || T > 1.0) throw std::domain_error("solve_upward: need 0 <= T <= 1");
  OdeResult res;
  res.value = z;
  if (T == 0.0) return res;
  const auto breaks = detail::forward_breaks(d, T);
  auto xi = [&](std::size_t ci, double tt) {
    return d.eval_cell(d.cell_of(0.5 * (breaks[ci] + breaks[ci + 1])), tt);
  };
  detail::State<1> y{z};
  res.status = detail::upward_cells(xi, breaks, y, opt, res);
  res.value = y[0];
  return res;
}

// ---------------------------------------------------------------------------
// f_T(z) = g_T^{-1}(z): upward flow with the reversed driver xi(s) =
// lambda(T - s), evaluated as a functional view so the interpolation cusps
// stay on the correct side of every cell.
// ---------------------------------------------------------------------------
inline OdeResult map_inverse(const SampledDriver& d, double T, Complex z,
                             const Options& opt = {}) {
  d.validate();
  if (z.imag() < 0.0) throw std::domain_error("map_inverse: need Im z >= 0");
  if (!(T >= 0.0) || T > 1.0) throw std::domain_error("map_inverse: need 0 <= T <= 1");
  OdeResult res;
  res.value = z;
  if (T == 0.0) return res;
  const auto breaks = detail::reversed_breaks(d, T);
  auto xi = [&](std::size_t ci, double s) {
    const double tt = T - s;
    return d.eval_cell(d.cell_of(T - 0.5 * (breaks[ci] + breaks[ci + 1])), tt);
  };
  detail::State<1> y{z};
  res.status = detail::upward_cells(xi, breaks, y, opt, res);
  res.value = y[0];
  return res;
}

// fhat_T(z) = f_T(z + lambda^n(T)); the ODE-side counterpart of the chain map.
inline OdeResult fhat_oracle(const SampledDriver& d, double T, Complex z,
                             const Options& opt = {}) {
  return map_inverse(d, T, z + d.eval(T), opt);
}

// f_T(u) together with f_T'(u) from the variational flow dh'/dt = 2h'/(h-xi)^2.
struct MapDeriv {
  Complex value{0.0, 0.0};
  Complex deriv{1.0, 0.0};
  OdeResult meta;
};

inline MapDeriv inverse_with_derivative(const SampledDriver& d, double T, Complex u,
                                        const Options& opt = {}) {
  d.validate();
  if (!(u.imag() > 0.0)) throw std::domain_error("inverse_with_derivative: need Im u > 0");
  if (!(T >= 0.0) || T > 1.0) throw std::domain_error("inverse_with_derivative: need 0 <= T <= 1");
  MapDeriv out;
  out.value = u;
  out.meta.value = u;
  if (T == 0.0) return out;
  const auto breaks = detail::reversed_breaks(d, T);
  auto xi = [&](std::size_t ci, double s) {
    const double tt = T - s;
    return d.eval_cell(d.cell_of(T - 0.5 * (breaks[ci] + breaks[ci + 1])), tt);
  };
  detail::State<2> y{u, Complex(1.0, 0.0)};
  out.meta.status = detail::upward_cells(xi, breaks, y, opt, out.meta);
  out.value = y[0];
  out.deriv = y[1];
  out.meta.value = y[0];
  return out;
}

// |fhat'_t(iy)| = |f_t'(iy + lambda^n(t))|
inline double fhat_prime(const SampledDriver& d, double t, double y, const Options& opt = {}) {
  if (!(y > 0.0)) throw std::domain_error("fhat_prime: need y > 0");
  if (t == 0.0) return 1.0;
  const MapDeriv md = inverse_with_derivative(d, t, Complex(d.eval(t), y), opt);
  if (md.meta.failed()) throw SolverError("fhat_prime: integration failed");
  return std::abs(md.deriv);
}

// ---------------------------------------------------------------------------
// h_T(z) = g_T^{-1}(z) round trip: w = upward(reversed driver), then the
// downward flow from w must return z.
// ---------------------------------------------------------------------------
struct InverseCheck {
  Complex w{0.0, 0.0};
  Complex z_back{0.0, 0.0};
  OdeResult up;
  OdeResult down;
  double roundtrip_error = 0.0;
};

inline InverseCheck inverse_check(const SampledDriver& d, Complex z, double T,
                                  const Options& opt = {}) {
  InverseCheck ic;
  ic.up = map_inverse(d, T, z, opt);
  if (ic.up.failed()) throw SolverError("inverse_check: upward leg failed");
  ic.w = ic.up.value;
  ic.down = solve_downward(d, ic.w, T, opt);
  if (ic.down.failed()) throw SolverError("inverse_check: downward leg failed");
  if (ic.down.blown_up) throw SolverError("inverse_check: point swallowed before T");
  ic.z_back = ic.down.value;
  ic.roundtrip_error = std::abs(ic.z_back - z);
  return ic;
}

// ---------------------------------------------------------------------------
// Hull rasterization (the blow-up-time algorithm): classify pixel centers by
// T_z <= t. Embarrassingly parallel across pixels.
// ---------------------------------------------------------------------------
struct Rect {
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
};

struct HullRaster {
  Rect bounds{};
  double resolution = 0.0;  // pixels per unit
  int nx = 0, ny = 0;
  std::vector<std::uint8_t> mask;  // row-major, row 0 at ymax; 1 = swallowed
  long failures = 0;

  bool swallowed(int ix, int row) const {
    return mask[static_cast<std::size_t>(row) * nx + ix] != 0;
  }
  double x_center(int ix) const { return bounds.xmin + (ix + 0.5) / resolution; }
  double y_center(int row) const { return bounds.ymax - (row + 0.5) / resolution; }
};

inline HullRaster hull_raster(const SampledDriver& d, double t, const Rect& bounds,
                              double resolution, const Options& opt = {}, unsigned threads = 0) {
  d.validate();
  if (!(bounds.xmin < bounds.xmax) || !(bounds.ymin < bounds.ymax))
    throw std::invalid_argument("hull_raster: empty bounds");
  if (!(bounds.ymin > 0.0)) throw std::invalid_argument("hull_raster: bounds must lie in H");
  if (!(resolution > 0.0)) throw std::invalid_argument("hull_raster: resolution must be positive");
  if (!(t >= 0.0) || t > 1.0) throw std::domain_error("hull_raster: need 0 <= t <= 1");
  HullRaster r;
  r.bounds = bounds;
  r.resolution = resolution;
  r.nx = std::max(1, static_cast<int>(std::lround((bounds.xmax - bounds.xmin) * resolution)));
  r.ny = std::max(1, static_cast<int>(std::lround((bounds.ymax - bounds.ymin) * resolution)));
  r.mask.assign(static_cast<std::size_t>(r.nx) * r.ny, 0);
  std::atomic<long> failures{0};
  parallel_for(r.mask.size(), [&](std::size_t idx) {
    const int row = static_cast<int>(idx) / r.nx;
    const int ix = static_cast<int>(idx) % r.nx;
    const Complex z(r.x_center(ix), r.y_center(row));
    const OdeResult res = solve_downward(d, z, t, opt);
    if (res.failed()) {
      failures.fetch_add(1, std::memory_order_relaxed);
      return;
    }
    r.mask[idx] = res.blown_up ? 1 : 0;
  }, threads);
  r.failures = failures.load();
  return r;
}

} // namespace loewner::ode
