#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "loewner/driver.hpp"

using namespace loewner;

TEST_CASE("sample_bm basics") {
  const SampledDriver d = sample_bm(8.0 / 3.0, 100, 1);
  REQUIRE(d.values.size() == 101);
  CHECK(d.values[0] == 0.0);
  CHECK(d.prov.kind == "bm");

  const SampledDriver a = sample_bm(2.0, 4, 7);
  const SampledDriver b = sample_bm(2.0, 4, 7);
  CHECK(a.values == b.values);  // determinism, bit-exact
}

TEST_CASE("sample_bm terminal variance matches kappa (Monte Carlo oracle)") {
  // Var(sqrt(kappa) B_1) = kappa
  const double kappa = 2.0;
  const int n = 100, trials = 10000;
  double sum = 0.0, sum2 = 0.0;
  for (int s = 1; s <= trials; ++s) {
    const double v = sample_bm(kappa, n, static_cast<std::uint64_t>(s)).values[100];
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / trials;
  const double var = sum2 / trials - mean * mean;
  CHECK(var == Catch::Approx(kappa).epsilon(0.05));
}

TEST_CASE("refine_bridge keeps coarse values bit-exactly") {
  const SampledDriver d = sample_bm(1.7, 32, 5);
  const SampledDriver f = refine_bridge(d, 99);
  REQUIRE(f.n == 64);
  for (int k = 0; k <= d.n; ++k)
    CHECK(f.values[static_cast<std::size_t>(2 * k)] == d.values[static_cast<std::size_t>(k)]);

  const SampledDriver f2 = refine_bridge(d, 99);
  CHECK(f.values == f2.values);  // determinism

  CHECK_THROWS_AS(refine_bridge(sqrt_driver(1.0, 8), 1), std::invalid_argument);
  CHECK_THROWS_AS(refine_bridge(perturb(d, 0.1, 3), 1), std::invalid_argument);
}

TEST_CASE("refine_bridge midpoint variance is kappa*dt/4 (Monte Carlo oracle)") {
  const double kappa = 1.0;
  const int n = 10, trials = 10000;
  const SampledDriver base = sample_bm(kappa, n, 42);
  double sum = 0.0, sum2 = 0.0;
  long count = 0;
  for (int s = 1; s <= trials; ++s) {
    const SampledDriver f = refine_bridge(base, static_cast<std::uint64_t>(s));
    for (int k = 0; k < n; ++k) {
      const double mid = f.values[static_cast<std::size_t>(2 * k) + 1];
      const double avg = 0.5 * (base.values[static_cast<std::size_t>(k)] +
                                base.values[static_cast<std::size_t>(k) + 1]);
      const double dv = mid - avg;
      sum += dv;
      sum2 += dv * dv;
      ++count;
    }
  }
  const double mean = sum / count;
  const double var = sum2 / count - mean * mean;
  CHECK(var == Catch::Approx(kappa / (4.0 * n)).epsilon(0.05));  // 1/40
}

TEST_CASE("sample_rw structure") {
  const SampledDriver d = sample_rw(4.0, 4, 3);
  CHECK(d.values[0] == 0.0);
  const double step = std::sqrt(4.0) / std::sqrt(4.0);  // = 1
  for (int k = 0; k < 4; ++k) CHECK(std::abs(d.dlambda(k)) == step);

  const SampledDriver e = sample_rw(3.0, 50, 11);
  const double mag = std::sqrt(3.0) / std::sqrt(50.0);
  for (int k = 0; k < e.n; ++k)
    CHECK(std::abs(e.dlambda(k)) == Catch::Approx(mag).epsilon(1e-14));
}

TEST_CASE("sample_rw terminal mean is 0 within Monte Carlo band") {
  const double kappa = 2.0;
  const int n = 64, trials = 10000;
  double sum = 0.0;
  for (int s = 1; s <= trials; ++s)
    sum += sample_rw(kappa, n, static_cast<std::uint64_t>(s)).values[static_cast<std::size_t>(n)];
  const double mean = sum / trials;
  // Var(values[n]) = kappa, so a 3 sigma band for the MC mean:
  CHECK(std::abs(mean) <= 3.0 * std::sqrt(kappa / trials));
}

TEST_CASE("sqrt_driver values") {
  const SampledDriver z = sqrt_driver(0.0, 8);
  for (double v : z.values) CHECK(v == 0.0);

  const SampledDriver d = sqrt_driver(1.0, 4);
  CHECK(d.values[0] == 0.0);
  CHECK(d.values[1] == Catch::Approx(0.5).margin(1e-15));
  CHECK(d.values[2] == Catch::Approx(std::sqrt(2.0) / 2.0).margin(1e-15));
  CHECK(d.values[3] == Catch::Approx(std::sqrt(3.0) / 2.0).margin(1e-15));
  CHECK(d.values[4] == 1.0);

  const SampledDriver dm = sqrt_driver(-1.0, 4);
  for (int k = 0; k <= 4; ++k)
    CHECK(dm.values[static_cast<std::size_t>(k)] == -d.values[static_cast<std::size_t>(k)]);
}

TEST_CASE("driver file round trip") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "loewner_test_driver.txt";
  const SampledDriver d = sample_bm(2.0, 17, 9);
  save_driver(d, path.string());
  const SampledDriver back = load_driver(path.string(), d.mode);
  CHECK(back.n == d.n);
  CHECK(back.values == d.values);  // %.17g round trip is bit-exact
  CHECK(!fs::exists(path.string() + ".tmp"));
  fs::remove(path);

  const fs::path bad = fs::temp_directory_path() / "loewner_test_bad.txt";
  {
    std::ofstream out(bad);
    out << "3\n0.0\n1.0\n";  // too few values
  }
  CHECK_THROWS_AS(load_driver(bad.string(), InterpMode::sqrt_interp), std::runtime_error);
  {
    std::ofstream out(bad);
    out << "1\n0.0\nnan\n";
  }
  CHECK_THROWS_AS(load_driver(bad.string(), InterpMode::sqrt_interp), std::runtime_error);
  fs::remove(bad);
}

TEST_CASE("perturb contract") {
  const SampledDriver d = sample_bm(2.0, 20, 4);
  const SampledDriver same = perturb(d, 0.0, 123);
  CHECK(same.values == d.values);

  const double eps = 0.01;
  const SampledDriver p = perturb(d, eps, 123);
  for (std::size_t k = 0; k < d.values.size(); ++k)
    CHECK(std::abs(p.values[k] - d.values[k]) <= eps);
  CHECK(p.prov.kind == "perturbed");
  CHECK(perturb(d, eps, 123).values == p.values);  // deterministic
}

TEST_CASE("osc on grid values") {
  const SampledDriver z = zero_driver(32);
  for (double delta : {0.01, 0.1, 0.5, 1.0}) CHECK(osc(z, delta) == 0.0);

  const double c = -2.5;
  const SampledDriver d = sqrt_driver(c, 64);
  CHECK(osc(d, 1.0) == Catch::Approx(std::abs(c)).margin(1e-15));

  const SampledDriver b = sample_bm(2.0, 256, 8);
  double prev = 0.0;
  for (double delta : {1.0 / 256, 1.0 / 64, 1.0 / 16, 0.25, 1.0}) {
    const double o = osc(b, delta);
    CHECK(o >= prev);
    prev = o;
  }
  CHECK_THROWS_AS(osc(b, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(osc(b, 1.5), std::invalid_argument);
}

TEST_CASE("weak Holder-1/2 constant stays bounded across seeds") {
  // Empirical analogue of the oscillation hypothesis with phi = C sqrt(log):
  // osc(1/m) sqrt(m) / sqrt(log m) bounded over dyadic m for Brownian paths.
  const double kappa = 1.0;
  const int n = 1024;
  double worst = 0.0;
  for (int seed = 1; seed <= 20; ++seed) {
    const SampledDriver d = sample_bm(kappa, n, static_cast<std::uint64_t>(seed));
    for (int m = 2; m <= n; m *= 2) {
      const double c = osc(d, 1.0 / m) * std::sqrt(static_cast<double>(m)) /
                       std::sqrt(std::log(static_cast<double>(m)));
      worst = std::max(worst, c);
    }
  }
  INFO("largest osc(1/m) sqrt(m)/sqrt(log m) over 20 seeds: " << worst);
  CHECK(worst < 6.0 * std::max(1.0, std::sqrt(kappa)));
}

TEST_CASE("kappa_to_a") {
  CHECK(kappa_to_a(0.0) == 0.5);
  CHECK(kappa_to_a(8.0 / 3.0) ==
        Catch::Approx(0.5 - std::sqrt(7.0) / 14.0).margin(1e-12));  // ~0.3110178
  Rng rng(17);
  for (int i = 0; i < 100; ++i) {
    const double kappa = rng.uniform(0.0, 16.0);
    const double a = kappa_to_a(kappa);
    CHECK(a > 0.0);
    CHECK(a <= 0.5);
    CHECK(std::abs(a_to_kappa(a) - kappa) <= 1e-12 * std::max(1.0, kappa));
  }
}

TEST_CASE("driver eval honors interpolation mode") {
  SampledDriver d = sqrt_driver(1.0, 4);
  // sqrt-interp reproduces c*sqrt(t) between grid points for c*sqrt(t) data
  d.mode = InterpMode::sqrt_interp;
  CHECK(d.eval(0.0) == 0.0);
  CHECK(d.eval(1.0) == Catch::Approx(1.0).margin(1e-15));
  // inside the first cell: lambda^n(t) = 2 * (1/2) * sqrt(t) ... = sqrt(t) exactly
  CHECK(d.eval(0.1) == Catch::Approx(std::sqrt(0.1)).margin(1e-12));

  d.mode = InterpMode::vertical_step;
  CHECK(d.eval(0.3) == d.values[1]);   // t in [1/4, 1/2)
  CHECK(d.eval(0.25) == d.values[1]);  // right-continuous at grid points
  CHECK(d.eval(0.999) == d.values[3]);
}
