#pragma once

#include <cstdint>

namespace lhop {

/// SplitMix64 generator. All randomness in the project flows through this so
/// that seeded runs are bit-identical across platforms; std::mt19937 /
/// std::uniform_real_distribution are avoided because their output is not
/// pinned by the standard.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint32_t next_u32() { return static_cast<std::uint32_t>(next_u64() >> 32); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  /// Derives an independent stream, e.g. one per grid cell or episode.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    Rng r(seed ^ (0xA0761D6478BD642Full + index * 0xE7037ED1A0B428DBull));
    return r.next_u64();
  }

 private:
  std::uint64_t state_;
};

}  // namespace lhop
