#pragma once

#include <cmath>
#include <cstdint>

namespace nbspectra {

/// Identifies one reproducible random stream: trials are pure functions of
/// (master_seed, trial_index), so they can run in any order or in parallel.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t trial_index = 0;
};

/// SplitMix64 stream. Output is fully specified by the seed, independent of
/// platform and standard library, which keeps golden files byte-stable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  explicit Rng(SeedSpec s) : state_(derive(s.master_seed, s.trial_index)) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1), 53 bits of precision.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, m). m must be positive.
  std::uint64_t below(std::uint64_t m) {
    // Rejection-free modulo is fine here: m is tiny compared to 2^64.
    return next_u64() % m;
  }

  bool coin() { return (next_u64() >> 63) != 0; }

  /// Geometric skip length for Bernoulli(p) scans: number of failures before
  /// the next success. Returns a huge value when p == 0.
  std::uint64_t geometric_skip(double p) {
    if (p <= 0.0) return ~0ull;
    if (p >= 1.0) return 0;
    double u = uniform();
    // u == 0 would give +inf; nudge into range.
    if (u <= 0.0) u = 0x1.0p-53;
    return static_cast<std::uint64_t>(std::floor(std::log(u) / std::log1p(-p)));
  }

  /// Stream seed for (master, trial): two mixing rounds so that nearby trial
  /// indices land in unrelated states.
  static std::uint64_t derive(std::uint64_t master, std::uint64_t trial) {
    Rng m(master ^ (0x9e3779b97f4a7c15ull * (trial + 1)));
    std::uint64_t s = m.next_u64();
    return s ^ m.next_u64();
  }

 private:
  std::uint64_t state_;
};

}  // namespace nbspectra
