#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace loewner {

// splitmix64 mixer, used to condition raw seeds and derive substreams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Deterministic substream seed for (seed, stream). Coupled refinement levels
// and per-seed study jobs each get their own stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ull));
}

// Seedable deterministic generator. Gaussian variates use an explicit
// Box-Muller transform so streams do not depend on the standard library's
// normal_distribution implementation. One gauss() consumes two uniforms.
class Rng {
public:
  static constexpr const char* kName = "mt19937_64/box-muller";

  explicit Rng(std::uint64_t seed) : eng_(mix64(seed)) {}

  static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
    return Rng(derive_seed(seed, stream_id));
  }

  // uniform on (0, 1]
  double uniform01() {
    return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // standard normal
  double gauss() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  // fair coin: +1 or -1
  int sign() { return uniform01() <= 0.5 ? 1 : -1; }

private:
  static constexpr double kTwoPi = 6.283185307179586476925287;
  std::mt19937_64 eng_;
};

} // namespace loewner
