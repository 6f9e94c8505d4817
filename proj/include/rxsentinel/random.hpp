#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>

namespace rxsentinel {

/// Portable seeded generator: xoshiro256** with its state expanded from the
/// seed by splitmix64. Every distribution below is defined here in terms of
/// `next()` so that streams are reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform on [0, n); n > 0. Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal, Box-Muller (one value per call, no caching).
  double normal();
  /// Poisson by Knuth's product method; intended for small means.
  std::uint64_t poisson(double mean);
  bool bernoulli(double p) { return uniform() < p; }

  /// Independent child stream; the parent advances by one draw.
  Rng fork() { return Rng(next()); }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace rxsentinel
