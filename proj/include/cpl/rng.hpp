#ifndef CPL_RNG_HPP
#define CPL_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace cpl {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Folds a list of tags into a seed. derive_seed(s, {a, b}) differs from
/// derive_seed(s, {b, a}) and from derive_seed(s, {a}).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t h = mix64(master ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t t : tags) h = mix64(h ^ mix64(t + 0x243f6a8885a308d3ULL));
  return h;
}

/// Deterministic random stream. Wraps mt19937_64 (whose output sequence is
/// fixed by the standard) and implements every derived distribution here
/// so that samples are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = n * (UINT64_MAX / n);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Index i with probability cumulative[i]-cumulative[i-1] over total.
  /// `cumulative` is an inclusive prefix sum of nonnegative weights.
  std::size_t pick_cumulative(std::span<const double> cumulative) {
    const double u = uniform01() * cumulative.back();
    std::size_t lo = 0, hi = cumulative.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (cumulative[mid] > u) hi = mid; else lo = mid + 1;
    }
    return lo;
  }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Stream purposes. Each (player, round, purpose) triple owns its own stream.
enum class Purpose : std::uint64_t {
  MixtureDraw = 1,
  Allocation,
  Test,
  LocalTraining,
  Reservoir,
  Resample,
  Shuffle,
  Scenario,
};

inline constexpr std::uint64_t kCenter = ~std::uint64_t{0};

/// Hands out the RNG streams of one protocol run.
class Streams {
 public:
  explicit Streams(std::uint64_t master_seed) : master_(master_seed) {}

  std::uint64_t master() const { return master_; }

  Rng player(std::uint64_t player_id, std::uint64_t round, Purpose p) const {
    return Rng(derive_seed(master_, {player_id, round, static_cast<std::uint64_t>(p)}));
  }
  Rng center(std::uint64_t round, Purpose p) const { return player(kCenter, round, p); }

  /// Streams of a nested sub-protocol (e.g. one boosting run inside round j).
  Streams child(std::uint64_t tag) const { return Streams(derive_seed(master_, {0xc417dULL, tag})); }

 private:
  std::uint64_t master_;
};

/// Per-trial seed of a Monte-Carlo batch.
constexpr std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial) noexcept {
  return derive_seed(master, {0x7472ULL, trial});
}

}  // namespace cpl

#endif
