#pragma once

#include <cstdint>

namespace qstab {

// Counter-based generator (splitmix64 over seed + k*golden). Output k is a
// pure function of (seed, k), so a stream can be replayed or forked without
// carrying state beyond two words.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() { return mix(seed_ + kGolden * ++counter_); }

  // Uniform on [0, 1) with 53-bit resolution.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_range(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  bool bernoulli(double prob) { return next_unit() < prob; }

  std::uint64_t seed() const { return seed_; }

  // Independent stream keyed off this generator's seed.
  CounterRng fork(std::uint64_t stream) const { return CounterRng(derive(seed_, stream)); }

  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    return mix(mix(seed + kGolden) ^ (index + kGolden));
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace qstab
