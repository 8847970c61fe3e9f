#pragma once

#include <cstdint>

namespace starklab {

/// Stateless counter-based generator: every draw is a pure function of
/// (key, counter), so block n of realization r is reachable without
/// generating any predecessor.
class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  constexpr std::uint64_t key() const noexcept { return key_; }

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return mix(mix(key_ ^ (counter * 0x9E3779B97F4A7C15ULL)) + counter);
  }

  /// Uniform on [0, 1) with 53 random bits.
  constexpr double uniform(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  /// Independent child key, e.g. one per realization.
  constexpr CounterRng derive(std::uint64_t stream) const noexcept {
    return CounterRng(mix(key_ + 0xD1B54A32D192ED03ULL * (stream + 1)));
  }

  // splitmix64 finalizer
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
};

}  // namespace starklab
