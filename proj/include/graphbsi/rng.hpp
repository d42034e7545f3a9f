#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace graphbsi {

// Purpose of a random stream. Part of the stream key so that, e.g., the prior
// draw and the step noise of the same component never share bits.
enum class StreamTag : std::uint64_t {
  kPrior = 1,
  kStep = 2,
  kFinal = 3,
  kTrainPick = 4,
  kTrainTime = 5,
  kTrainNoise = 6,
  kDataset = 7,
  kNodeCount = 8,
  kInit = 9,
  kElbo = 10,
};

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based generator: the i-th output is a pure function of (key, i).
// Satisfies UniformRandomBitGenerator so the standard distributions apply.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix64(key_ ^ mix64(++counter_)); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double normal() { return normal_(*this); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Root of all randomness for one run. Streams are keyed by
// (seed, tag, step, channel, component), so results do not depend on the
// order in which components are processed or on how work is batched.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed) noexcept : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  CounterRng stream(StreamTag tag, std::uint64_t step, std::uint64_t channel = 0,
                    std::uint64_t component = 0) const noexcept {
    std::uint64_t h = mix64(seed_ ^ 0x6a09e667f3bcc908ULL);
    h = mix64(h ^ static_cast<std::uint64_t>(tag));
    h = mix64(h ^ step);
    h = mix64(h ^ channel);
    h = mix64(h ^ component);
    return CounterRng(h);
  }

 private:
  std::uint64_t seed_;
};

}  // namespace graphbsi
