#pragma once

#include <cstdint>
#include <random>

namespace ccsearch {

/// splitmix64 finalizer; used to derive well-mixed child seeds.
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Seedable random source with explicit stream splitting.
///
/// All draws go through mt19937_64 raw output (whose sequence the standard
/// pins down exactly), never through std distributions, so results are
/// identical across standard libraries. Streams are derived from the base
/// seed and a tag, not from engine state: splitting never advances the
/// parent, which keeps parallel fan-out away from the draw sequence.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : base_(seed), engine_(splitmix64(seed)) {}

  /// Child stream for `tag`; independent of any draws made on this object.
  SplitRng split(std::uint64_t tag) const {
    return SplitRng(splitmix64(base_ ^ splitmix64(tag + 0x51ed2701a3c51a2full)));
  }

  std::uint64_t base_seed() const { return base_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [low, high); returns low when the range is degenerate.
  double uniform(double low, double high) { return low + uniform01() * (high - low); }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n) {
    const std::uint64_t bound = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = next_u64();
    while (x >= bound) x = next_u64();
    return static_cast<std::size_t>(x % n);
  }

 private:
  std::uint64_t base_;
  std::mt19937_64 engine_;
};

}  // namespace ccsearch
