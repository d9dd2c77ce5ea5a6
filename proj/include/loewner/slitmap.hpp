#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

namespace loewner {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// One step's tilted-slit map
//
//   G(z) = (z + a)^(1-alpha) (z - b)^alpha
//
// takes H onto H minus a straight slit of angle alpha*pi from 0. The base
// stays at the origin because alpha*a = (1-alpha)*b, and G(z) - z tends to
// (1-alpha)*a - alpha*b = dlambda at infinity. dt is the half-plane-capacity
// time the step consumes, alpha*(1-alpha)*(a+b)^2/4 = dt by construction.
struct SlitParams {
  double alpha;
  double a;
  double b;
  double dt;
  double dlambda;
};

// Parameters for the step with driver increment dlambda over capacity dt.
// With c = dlambda/sqrt(dt),
//   alpha = 1/2 - (1/2) c / sqrt(16 + c^2),
// evaluated in a cancellation-free form for large |c|.
inline SlitParams params_from_step(double dlambda, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("params_from_step: dt must be positive");
  if (!std::isfinite(dlambda)) throw std::invalid_argument("params_from_step: dlambda not finite");
  const double c = dlambda / std::sqrt(dt);
  const double s = std::sqrt(16.0 + c * c);
  const double alpha = (c >= 0.0) ? 8.0 / (s * (s + c)) : (s - c) / (2.0 * s);
  const double omal = (c >= 0.0) ? (s + c) / (2.0 * s) : 8.0 / (s * (s - c));
  SlitParams p;
  p.alpha = alpha;
  p.a = 2.0 * std::sqrt(omal * dt / alpha);
  p.b = 2.0 * std::sqrt(alpha * dt / omal);
  p.dt = dt;
  p.dlambda = dlambda;
  return p;
}

// G evaluated through two principal logarithms. For Im z >= 0 the arguments
// of z+a and z-b lie in [0, pi], so no branch cut is crossed anywhere in the
// closed half plane; a single power of the product would cross one. Points
// of (-a, b) on the real axis map onto the slit itself.
inline Complex eval_tilted(const SlitParams& p, Complex z) {
  if (z.imag() < 0.0) throw std::domain_error("eval_tilted: z in lower half plane");
  if (z.imag() == 0.0) z = Complex(z.real(), 0.0);  // normalize -0.0
  const Complex zl = z + p.a;
  const Complex zr = z - p.b;
  if (zl == 0.0 || zr == 0.0) return Complex(0.0, 0.0);  // slit base, by continuity
  return std::exp((1.0 - p.alpha) * std::log(zl) + p.alpha * std::log(zr));
}

// Image of 0: the tip of the slit, a^(1-alpha) b^alpha e^(i alpha pi).
inline Complex tip(const SlitParams& p) {
  const double r = std::exp((1.0 - p.alpha) * std::log(p.a) + p.alpha * std::log(p.b));
  return Complex(r * std::cos(p.alpha * kPi), r * std::sin(p.alpha * kPi));
}

// Vertical slit map for Variant 3: H onto H minus (shift, shift + 2i sqrt(dt)],
// fixing infinity. Equals the symmetric tilted map translated to shift.
inline Complex eval_vertical(double dt, Complex z, double shift) {
  if (!(dt > 0.0)) throw std::invalid_argument("eval_vertical: dt must be positive");
  if (z.imag() < 0.0) throw std::domain_error("eval_vertical: z in lower half plane");
  const SlitParams p = params_from_step(0.0, dt);  // alpha = 1/2, a = b = 2 sqrt(dt)
  return shift + eval_tilted(p, z - shift);
}

} // namespace loewner
