#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace putilt {

/// Deterministic random stream. The engine is mt19937_64 (its output sequence
/// is fixed by the standard); all variate transforms are implemented here so
/// that results do not depend on the standard library's distribution
/// implementations. Streams for parallel work units are derived from
/// (seed, index...) via Rng::derive, so results are independent of thread
/// scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via the Marsaglia polar method.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Binomial as a sum of Bernoulli trials (trial counts here are small).
  long binomial(long trials, double p) {
    long k = 0;
    for (long i = 0; i < trials; ++i) k += bernoulli(p) ? 1 : 0;
    return k;
  }

  /// Unbiased integer in [0, n) by rejection.
  std::size_t uniform_index(std::size_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
  }

  /// Fisher-Yates shuffle of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) {
      std::swap(idx[i - 1], idx[uniform_index(i)]);
    }
    return idx;
  }

  /// Stateless seed derivation (splitmix64 over the seed and stream indices).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) {
    std::uint64_t x = seed;
    x = splitmix(x + 0x9E3779B97F4A7C15ULL * (a + 1));
    x = splitmix(x + 0xBF58476D1CE4E5B9ULL * (b + 1));
    x = splitmix(x + 0x94D049BB133111EBULL * (c + 1));
    return x;
  }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace putilt
