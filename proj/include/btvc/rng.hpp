#pragma once

// Deterministic random source. One Rng per sequential task; derive() spawns
// statistically independent streams keyed by (seed, label, index) so that a
// parallel schedule and a sequential one consume identical numbers.

#include <cstdint>
#include <random>
#include <string_view>

#include "btvc/normal.hpp"

namespace btvc {

namespace detail {

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t h = kFnvOffset) {
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform draw strictly inside (0, 1): 53 random bits offset by half an ulp.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via the AS241 inverse CDF (one uniform per draw).
  double standard_normal() { return normal_quantile(uniform()); }

  /// Independent child stream. Derivation uses the stored seed, not engine
  /// state, so it is insensitive to how many draws were consumed.
  Rng derive(std::string_view label, std::uint64_t index = 0) const {
    const std::uint64_t h = detail::fnv1a64(label);
    return Rng(detail::splitmix64(seed_ ^ h ^
                                  (0x9e3779b97f4a7c15ull * (index + 1))));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace btvc
