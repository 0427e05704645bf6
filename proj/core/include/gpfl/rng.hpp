#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace gpfl::rng {

/// SplitMix64 step. Used to derive substream seeds so that every noise
/// source can be keyed by (seed, round, symbol, ...) and drawn in any order.
inline std::uint64_t split_mix(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Combine a seed with a stream tag into a new independent seed.
inline std::uint64_t mix(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t s = seed ^ (0x6a09e667f3bcc909ULL + tag);
  std::uint64_t a = split_mix(s);
  s ^= tag * 0x9e3779b97f4a7c15ULL;
  return a ^ split_mix(s);
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix(mix(seed, a), b);
}

/// Deterministic random stream. The engine output of std::mt19937_64 is
/// pinned by the standard; uniform/normal conversions are implemented here
/// rather than with std::*_distribution, whose algorithms are
/// implementation-defined. Two runs with the same seed produce identical
/// draws on any conforming platform with the same libm.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in (0, 1]; safe as a log() argument.
  double uniform_pos() {
    return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller (pairs cached).
  double normal();

  /// Circularly symmetric complex normal with E|z|^2 = var.
  std::complex<double> cnormal(double var);

  /// Gamma(shape, 1) via Marsaglia-Tsang; shape > 0.
  double gamma(double shape);

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gpfl::rng
