#pragma once

#include <cstdint>

namespace effgrow {

/// Stateless counter-based generator: draw k of stream `seed` is
///
///   z  = seed + (k + 1) * 0x9E3779B97F4A7C15            (mod 2^64)
///   z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z  = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   out = z ^ (z >> 31)
///
/// i.e. the SplitMix64 finalizer applied to a Weyl sequence. Doubles take the
/// top 53 bits: u = (out >> 11) * 2^-53, uniform on [0, 1). Any implementation
/// of these three lines reproduces the same stream bit for bit.
class CounterRng {
public:
  explicit constexpr CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    std::uint64_t z = seed_ + (counter + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  constexpr double uniform(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  constexpr std::uint64_t seed() const noexcept { return seed_; }

private:
  std::uint64_t seed_;
};

/// Sequential convenience wrapper over CounterRng.
class CounterStream {
public:
  explicit constexpr CounterStream(std::uint64_t seed) noexcept : rng_(seed) {}
  double uniform() noexcept { return rng_.uniform(next_++); }
  std::uint64_t bits() noexcept { return rng_.bits(next_++); }
  std::uint64_t position() const noexcept { return next_; }

private:
  CounterRng rng_;
  std::uint64_t next_ = 0;
};

}  // namespace effgrow
