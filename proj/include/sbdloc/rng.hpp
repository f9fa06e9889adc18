#ifndef SBDLOC_RNG_HPP_
#define SBDLOC_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <string_view>

namespace sbdloc {

inline constexpr double kPi = 3.14159265358979323846;

// 64-bit FNV-1a. Used for role-based seed derivation and file checksums.
constexpr uint64_t fnv1a64(std::string_view data,
                           uint64_t h = 0xcbf29ce484222325ull) {
  for (const char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace detail {
constexpr uint64_t splitmix64_mix(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}
}  // namespace detail

// Derives an independent sub-seed from a base seed and a role label, so each
// pipeline stage ("simulate", "run[3]", ...) owns a deterministic stream.
constexpr uint64_t derive_seed(uint64_t base, std::string_view role) {
  return detail::splitmix64_mix(base ^ fnv1a64(role));
}

// SplitMix64 generator. Counter-based state, 64-bit output, splittable via
// derive_seed. All stochastic draws in the project flow through this class so
// that identical seeds give bit-identical runs on any platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), state_(seed) {}

  uint64_t seed() const { return seed_; }

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return detail::splitmix64_mix(state_);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

  // Uniform integer in [0, n). Multiply-shift; bias is O(n / 2^64).
  uint64_t uniform_below(uint64_t n) {
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Box-Muller, two uniforms per draw, no caching (keeps the stream layout
  // independent of call history).
  double normal(double mean, double sd) {
    const double u1 = 1.0 - uniform01();  // (0, 1], log stays finite
    const double u2 = uniform01();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    return mean + sd * z;
  }

  double exponential(double rate) {
    return -std::log(1.0 - uniform01()) / rate;
  }

  // Counts unit-rate exponential arrivals below `mean`. Exact for any mean,
  // no underflow for large means; consumes ~mean+1 uniforms.
  uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    double acc = 0.0;
    uint64_t k = 0;
    for (;;) {
      acc += exponential(1.0);
      if (acc > mean) return k;
      ++k;
    }
  }

  Rng derived(std::string_view role) const {
    return Rng(derive_seed(seed_, role));
  }

 private:
  uint64_t seed_;
  uint64_t state_;
};

}  // namespace sbdloc

#endif  // SBDLOC_RNG_HPP_
