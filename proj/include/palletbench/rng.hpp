#pragma once

#include <cstddef>
#include <cstdint>

namespace palletbench {

// splitmix64 (Steele, Lea & Flood). Element i of the stream for seed s is the
// (i+1)-th output of a generator whose state starts at s.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) from the top 53 bits.
  constexpr double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  constexpr double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  // Uniform integer in [lo, hi] (inclusive), by modulo reduction.
  constexpr std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next() % span);
  }

 private:
  std::uint64_t state_;
};

/// Element `index` of the splitmix64 stream seeded with `seed`.
constexpr std::uint64_t splitmix64_at(std::uint64_t seed, std::size_t index) noexcept {
  // state after k steps is seed + k*gamma, so random access is O(1)
  SplitMix64 gen(seed + static_cast<std::uint64_t>(index) * 0x9E3779B97F4A7C15ULL);
  return gen.next();
}

/// Seed of an independent sub-stream keyed by (seed, key).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) noexcept {
  SplitMix64 gen(seed ^ (key * 0xD1B54A32D192ED03ULL));
  gen.next();
  return gen.next();
}

}  // namespace palletbench
