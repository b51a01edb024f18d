#include "subtrack/random.hpp"

namespace subtrack {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b + 0x632be59bd9b4e019ULL));
}

RandomSource::RandomSource(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

std::uint64_t RandomSource::next_u64() {
  ++draws_;
  return engine_();
}

double RandomSource::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomSource::normal(double mean, double stddev) {
  ++draws_;
  return normal_(engine_, std::normal_distribution<double>::param_type(mean, stddev));
}

std::size_t RandomSource::index(std::size_t n) {
  if (n <= 1) return 0;
  // Lemire-style rejection keeps the draw unbiased.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return static_cast<std::size_t>(r % bound);
  }
}

RandomSource RandomSource::fork(std::uint64_t stream) const {
  return RandomSource(mix_seed(seed_, stream));
}

}  // namespace subtrack
