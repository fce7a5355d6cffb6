#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "loradp/error.hpp"

namespace loradp {

// Deterministic splittable generator built on SplitMix64. A generator is fully
// identified by (seed, stream); identical pairs reproduce identical sequences
// on every platform, which is why this is hand-rolled instead of <random>
// (std distributions are not cross-implementation reproducible). Trial t of a
// sweep uses stream index t.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {
    state_ = mix(seed + 0x9E3779B97F4A7C15ull);
    state_ = mix(state_ ^ mix(stream * 0x9E3779B97F4A7C15ull + 0x632BE59BD9B4E019ull));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Independent generator for a derived stream of the same seed.
  Rng split(std::uint64_t stream) const { return Rng(seed_, stream); }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix(state_);
  }

  // Uniform on [0, 1), 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; never zero (safe under log()).
  double next_double_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Unbiased uniform draw in [0, n) by rejection.
  std::uint64_t next_below(std::uint64_t n) {
    require(n > 0, "next_below: n must be positive");
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t overhang = (max % n + 1) % n;  // 2^64 mod n
    std::uint64_t r = next_u64();
    if (overhang != 0) {
      const std::uint64_t cutoff = 0 - overhang;  // 2^64 - overhang
      while (r >= cutoff) r = next_u64();
    }
    return r % n;
  }

  bool next_bool() { return (next_u64() >> 63) != 0; }

  // Standard normal via Box-Muller (cosine branch only, keeping the state
  // a pure function of the draw count).
  double next_gaussian() {
    const double u1 = next_double_pos();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 boosted through
  // Gamma(shape+1) * U^(1/shape).
  double next_gamma(double shape) {
    require(shape > 0.0, "next_gamma: shape must be positive");
    if (shape < 1.0) {
      const double g = next_gamma(shape + 1.0);
      const double u = next_double_pos();
      return g * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = next_gaussian();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = next_double_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double next_beta(double a, double b) {
    const double x = next_gamma(a);
    const double y = next_gamma(b);
    return x / (x + y);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  std::uint64_t seed_;
  std::uint64_t stream_;
};

}  // namespace loradp
