#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace fedsim {

// splitmix64 finalizer, used for seed-stream derivation.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for a named stream. Streams are identified by a tag plus up to
/// two indices (e.g. round, client id), so distinct (tag, a, b) triples give
/// statistically independent generators from one base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = mix64(base);
  h = mix64(h ^ tag);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  return h;
}

// Every consumer of randomness draws from its own stream. Keeping the tags in
// one table makes accidental stream collisions visible.
namespace stream {
inline constexpr std::uint64_t kWeightInit = 0xA1;
inline constexpr std::uint64_t kSelection = 0xA2;
inline constexpr std::uint64_t kClientUpdate = 0xA3;
inline constexpr std::uint64_t kShare = 0xA4;
inline constexpr std::uint64_t kSynthProfile = 0xA5;
inline constexpr std::uint64_t kSynthRows = 0xA6;
inline constexpr std::uint64_t kRepetition = 0xA7;
inline constexpr std::uint64_t kPartition = 0xA8;
inline constexpr std::uint64_t kFolds = 0xA9;
inline constexpr std::uint64_t kHoldout = 0xAA;
inline constexpr std::uint64_t kRun = 0xAB;
}  // namespace stream

/// Deterministic random source. The mt19937_64 raw output sequence is pinned
/// by the standard; the transforms below are hand-rolled because the
/// std::*_distribution classes and std::shuffle are implementation-defined
/// and would change results across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double next_unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  bool bernoulli(double p) { return next_unit() < p; }

  /// Uniform integer in [0, bound); bound must be nonzero.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("next_below: zero bound");
    // Rejection sampling over the largest multiple of bound.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    shuffle(p);
    return p;
  }

  /// k distinct indices drawn uniformly from [0, n), in draw order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    if (k > n) throw std::invalid_argument("sample_indices: k > n");
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(next_below(n - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace fedsim
