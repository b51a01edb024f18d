#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace subtrack {

// Seeded source of randomness. Every stochastic routine takes one of these
// explicitly; two sources built from the same seed yield identical draws.
// Single owner: never share one instance between concurrent episodes.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return draws_; }

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal(double mean, double stddev);
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer on [0, n).
  std::size_t index(std::size_t n);

  // Independent child stream, deterministic in (seed, stream).
  RandomSource fork(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

// SplitMix64 finalizer; used to derive per-episode seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace subtrack
