#pragma once

// Deterministic random number generation.
//
// The library never uses std::random distributions: their outputs may differ
// between standard library implementations, which would break byte-identical
// reruns across toolchains. Instead we use the xoshiro256++ generator seeded
// via splitmix64, a fixed 53-bit uniform mapping, and an explicit Box-Muller
// transform for normals. Independent child streams are derived by hashing the
// parent seed together with caller-supplied tags, so each (strategy, window)
// or (bootstrap sample, model) pair draws from its own stream regardless of
// evaluation order.

#include <array>
#include <cmath>
#include <cstdint>

namespace folio {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

/// Stateless mix of a seed with three tags, used to derive child streams.
inline std::uint64_t mix_tags(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                              std::uint64_t c) {
  std::uint64_t sm = seed ^ 0x6a09e667f3bcc909ULL;
  sm ^= splitmix64(sm) + a * 0x9e3779b97f4a7c15ULL;
  sm ^= splitmix64(sm) + b * 0xd6e8feb86659fd93ULL;
  sm ^= splitmix64(sm) + c * 0xa0761d6478bd642fULL;
  return splitmix64(sm);
}

}  // namespace detail

/// xoshiro256++ with explicit seeding and stream derivation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = detail::splitmix64(sm);
  }

  /// Derives an independent child stream from this stream's seed and up to
  /// three tags. Derivation depends only on the constructor seed and the tags,
  /// never on how many draws the parent has made.
  Rng stream(std::uint64_t tag_a, std::uint64_t tag_b = 0, std::uint64_t tag_c = 0) const {
    return Rng(detail::mix_tags(seed_, tag_a, tag_b, tag_c));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  /// Uniform draw in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Uses the multiply-shift reduction, which is
  /// bias-negligible for the n used here and identical on every platform.
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Standard normal draw via Box-Muller. Generates pairs and caches the
  /// second value; the cache is part of the generator state.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    // Shift into (0, 1] so that log() never sees zero.
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace folio
