#pragma once

// Seeded, splittable random streams. All transforms (uniform, normal, gamma)
// are implemented here on top of mt19937_64 so that sequences are
// bit-reproducible for a given (seed, stream_id) independent of the standard
// library's distribution implementations.

#include <cmath>
#include <cstdint>
#include <random>

#include "mgig/common.hpp"

namespace mgig {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id),
        engine_(detail::splitmix64(detail::splitmix64(seed) ^ stream_id)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Independent sibling stream; the only sanctioned way to fan out.
  RngStream sibling(std::uint64_t stream_id) const { return RngStream(seed_, stream_id); }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on (0,1); never returns 0 or 1.
  double uniform() {
    const double u = (engine_() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-54;
  }

  // Box-Muller, one value per call (no cached spare, so call sequences
  // replay exactly regardless of interleaving).
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Marsaglia-Tsang; unit scale.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw InvalidParamsError("gamma: shape must be positive");
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

  double exponential() { return -std::log(uniform()); }

 private:
  std::uint64_t seed_, stream_id_;
  std::mt19937_64 engine_;
};

}  // namespace mgig
