#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "loewner/rng.hpp"
#include "loewner/slitmap.hpp"

using namespace loewner;
using Catch::Approx;

namespace {

double rel_err(Complex got, Complex want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

SlitParams random_params(Rng& rng) {
  const double dt = std::pow(10.0, rng.uniform(-6.0, 0.0));
  const double c = rng.uniform(-10.0, 10.0);
  return params_from_step(c * std::sqrt(dt), dt);
}

} // namespace

TEST_CASE("params_from_step worked values") {
  const int n = 25;
  const SlitParams sym = params_from_step(0.0, 1.0 / n);
  CHECK(sym.alpha == 0.5);
  CHECK(sym.a == Approx(2.0 / std::sqrt(double(n))).margin(1e-15));
  CHECK(sym.b == sym.a);

  // dlambda=3, dt=1: c=3, sqrt(16+9)=5, alpha=0.2, a=4, b=1
  const SlitParams p = params_from_step(3.0, 1.0);
  CHECK(p.alpha == Approx(0.2).margin(1e-15));
  CHECK(p.a == Approx(4.0).margin(1e-14));
  CHECK(p.b == Approx(1.0).margin(1e-14));
  CHECK(p.alpha * p.a == Approx(0.8).margin(1e-14));
  CHECK((1.0 - p.alpha) * p.b == Approx(0.8).margin(1e-14));

  // mirror: alpha(-c) = 1 - alpha(c), a and b swap
  const SlitParams q = params_from_step(-3.0, 1.0);
  CHECK(q.alpha == Approx(0.8).margin(1e-15));
  CHECK(q.a == Approx(1.0).margin(1e-14));
  CHECK(q.b == Approx(4.0).margin(1e-14));

  CHECK_THROWS_AS(params_from_step(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("SlitParams invariants for random steps") {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const SlitParams p = random_params(rng);
    CHECK(p.alpha > 0.0);
    CHECK(p.alpha < 1.0);
    CHECK(p.a > 0.0);
    CHECK(p.b > 0.0);
    // slit base at the origin
    CHECK(std::abs(p.alpha * p.a - (1.0 - p.alpha) * p.b) <= 1e-12 * std::max(p.a, p.b));
    // translation at infinity equals the driver increment
    CHECK(std::abs((1.0 - p.alpha) * p.a - p.alpha * p.b - p.dlambda) <=
          1e-12 * std::max(1.0, std::abs(p.dlambda)));
    // capacity of the step is dt
    const double cap = p.alpha * (1.0 - p.alpha) * (p.a + p.b) * (p.a + p.b) / 4.0;
    CHECK(cap == Approx(p.dt).epsilon(1e-12));
  }
}

TEST_CASE("eval_tilted worked values") {
  // symmetric slit reduces to sqrt(z^2 - 4)
  const SlitParams sym{0.5, 2.0, 2.0, 1.0, 0.0};
  CHECK(rel_err(eval_tilted(sym, Complex(0.0, 2.0)), Complex(0.0, std::sqrt(8.0))) < 1e-14);

  // alpha=0.2, a=4, b=1 at z=0: the tip 4^{0.8} e^{0.2 pi i}
  const SlitParams p = params_from_step(3.0, 1.0);
  const double r = std::pow(4.0, 0.8);
  const Complex want(r * std::cos(0.2 * kPi), r * std::sin(0.2 * kPi));
  CHECK(rel_err(eval_tilted(p, Complex(0.0, 0.0)), want) < 1e-13);
  CHECK(rel_err(tip(p), want) < 1e-13);

  // far field carries the translation dlambda = 3
  const Complex far = eval_tilted(p, Complex(0.0, 1e6));
  CHECK(std::abs(far - Complex(0.0, 1e6) - Complex(3.0, 0.0)) < 1e-5);

  CHECK_THROWS_AS(eval_tilted(p, Complex(0.0, -0.1)), std::domain_error);
}

TEST_CASE("tip phase is alpha*pi and boundary maps to the slit") {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const SlitParams p = random_params(rng);
    CHECK(std::arg(tip(p)) / kPi == Approx(p.alpha).margin(1e-12));
  }
  // slit endpoints map to the base point 0
  const SlitParams p = params_from_step(3.0, 1.0);
  CHECK(eval_tilted(p, Complex(-p.a, 0.0)) == Complex(0.0, 0.0));
  CHECK(eval_tilted(p, Complex(p.b, 0.0)) == Complex(0.0, 0.0));
  // interior boundary points land on the slit ray
  for (double x : {-3.0, -1.0, 0.5, 0.9}) {
    const Complex w = eval_tilted(p, Complex(x, 0.0));
    CHECK(std::arg(w) == Approx(p.alpha * kPi).margin(1e-12));
  }
}

TEST_CASE("vertical slit map") {
  const double dt = 0.25;
  CHECK(rel_err(eval_vertical(dt, Complex(1.5, 0.0), 1.5),
                Complex(1.5, 2.0 * std::sqrt(dt))) < 1e-14);
  CHECK(rel_err(eval_vertical(1.0, Complex(3.0, 0.0), 0.0), Complex(std::sqrt(5.0), 0.0)) < 1e-14);
  for (double y : {0.1, 1.0, 17.0}) {
    CHECK(rel_err(eval_vertical(dt, Complex(0.0, y), 0.0),
                  Complex(0.0, std::sqrt(y * y + 4.0 * dt))) < 1e-14);
  }
  // negative real points keep the sign of the far field
  CHECK(rel_err(eval_vertical(1.0, Complex(-3.0, 0.0), 0.0), Complex(-std::sqrt(5.0), 0.0)) <
        1e-14);
}

TEST_CASE("half plane preserved up to roundoff") {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const SlitParams p = random_params(rng);
    const Complex z(rng.uniform(-10.0, 10.0),
                    (i % 5 == 0) ? 0.0 : std::pow(10.0, rng.uniform(-8.0, 2.0)));
    const Complex w = eval_tilted(p, z);
    CHECK(w.imag() >= -1e-14 * (1.0 + std::abs(z)));
  }
}

TEST_CASE("hydrodynamic shift error decays like 1/Y") {
  Rng rng(13);
  for (int i = 0; i < 50; ++i) {
    const SlitParams p = random_params(rng);
    const double e3 = std::abs(eval_tilted(p, Complex(0.0, 1e3)) - Complex(0.0, 1e3) - p.dlambda);
    const double e6 = std::abs(eval_tilted(p, Complex(0.0, 1e6)) - Complex(0.0, 1e6) - p.dlambda);
    CHECK(e3 <= 10.0 * (p.dt + p.dlambda * p.dlambda) / 1e3);
    if (e6 > 0.0) CHECK(e3 / e6 >= 1e2);
  }
}

TEST_CASE("imaginary part of G(iy) increases") {
  Rng rng(19);
  for (int trial = 0; trial < 1000; ++trial) {
    const SlitParams p = random_params(rng);
    double prev = -1.0;
    for (int i = 0; i < 100; ++i) {
      const double y = 1e-6 * std::pow(10.0, 9.0 * i / 99.0);
      const double im = eval_tilted(p, Complex(0.0, y)).imag();
      CHECK(im > prev);
      prev = im;
    }
  }
}

TEST_CASE("mirror symmetry") {
  Rng rng(23);
  for (int i = 0; i < 1000; ++i) {
    const double dt = std::pow(10.0, rng.uniform(-4.0, 0.0));
    const double dl = rng.uniform(-3.0, 3.0) * std::sqrt(dt);
    const Complex z(rng.uniform(-5.0, 5.0), std::pow(10.0, rng.uniform(-6.0, 1.0)));
    const Complex lhs = eval_tilted(params_from_step(-dl, dt), z);
    const Complex rhs = -std::conj(eval_tilted(params_from_step(dl, dt), -std::conj(z)));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(lhs)));
  }
}
