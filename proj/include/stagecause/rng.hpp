#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace stagecause {

// SplitMix64 finalizer. Used for seed derivation only.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream-splitting rule: the seed of a sub-stream identified by a tuple of
// integers is the SplitMix64 chain seed -> mix(seed ^ id0) -> mix(. ^ id1)...
// Everything that needs randomness inside a batch (a grid cell, a repetition,
// a stratum, a k-means restart) derives its own seed this way, so results
// never depend on scheduling order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t id : ids) h = mix64(h ^ mix64(id + 0x632be59bd9b4e019ULL));
  return h;
}

// Portable random source: std::mt19937_64 (whose raw output is fixed by the
// standard) plus distribution code written here, since the standard library
// distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), unbiased (rejection on the top range).
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Standard exponential.
  double exponential() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return -std::log(u);
  }

  // Index drawn with probability proportional to weights (need not sum to 1).
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    const double u = uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      acc += weights[i];
      last_positive = i;
      if (u < acc) return i;
    }
    return last_positive;
  }

  // Dirichlet(1, ..., 1) as normalized exponentials, clamped away from 0.
  std::vector<double> dirichlet_flat(std::size_t dim, double floor = 1e-12) {
    std::vector<double> v(dim);
    double total = 0.0;
    for (auto& x : v) total += (x = exponential());
    double renorm = 0.0;
    for (auto& x : v) {
      x = std::max(x / total, floor);
      renorm += x;
    }
    for (auto& x : v) x /= renorm;
    return v;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace stagecause
