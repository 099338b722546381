#pragma once

#include <cstdint>
#include <string_view>

namespace scpinn {

/// Counter-based pseudo-random generator with explicit stream splitting.
///
/// Training must be bitwise reproducible across runs and platforms, so we do
/// not use <random> distributions (their output is implementation-defined).
/// The core is splitmix64, which is tiny, well mixed, and fast enough that
/// sampling is never a bottleneck here.
///
/// Streams are derived, never shared: Rng(seed).stream("batch", k) gives an
/// independent generator per (seed, purpose, index) triple, so adding a
/// consumer somewhere cannot shift the values another consumer sees.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // Decorrelate trivially related seeds (0, 1, 2, ...) before first use.
    next_u64();
  }

  /// Independent generator for a named purpose and index.
  Rng stream(std::string_view label, std::uint64_t index) const {
    std::uint64_t h = state_;
    for (char c : label) h = mix(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    return Rng(mix(h ^ index), tag{});
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return finalize(state_);
  }

  /// Uniform in [0, 1): 53 random bits scaled, the usual double construction.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller. One value per call; the second branch
  /// of the pair is cached so consecutive calls stay cheap.
  double normal();

  /// Integer in [0, n). Rejection-free modulo is fine: n is always tiny
  /// relative to 2^64 so the bias is far below double resolution.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  struct tag {};
  Rng(std::uint64_t raw_state, tag) : state_(raw_state) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    return finalize(z);
  }
  static std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace scpinn
