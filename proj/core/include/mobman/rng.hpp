#pragma once

#include <cstdint>

namespace mobman {

/// splitmix64 stream: tiny, fully specified, identical on every platform.
/// Used everywhere randomness must be reproducible byte-for-byte.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Derives an independent stream (per object, per episode...).
  Rng fork(std::uint64_t salt) {
    return Rng(next_u64() ^ (salt * 0xd6e8feb86659fd93ull + 0x2545f4914f6cdd1dull));
  }

 private:
  std::uint64_t state_;
};

}  // namespace mobman
