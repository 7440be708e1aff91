#pragma once

#include <cstdint>

namespace blight {

// Counter-based random stream.
//
// Output i of stream (seed, id) is mix64(key + (i + 1) * kGamma) where
// key = mix64(seed ^ mix64(id + kGamma)) and mix64 is the SplitMix64
// finalizer (Stafford "Mix13"). Every value depends only on (seed, id, i),
// so substreams can be handed to worker threads in any order and any
// language that implements these three lines reproduces the same draws.
class CounterRng {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  static constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_(mix64(seed ^ mix64(stream + kGamma))) {}

  constexpr std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGamma);
  }

  /// Uniform double strictly inside (0, 1): 53 random bits, offset by half an ulp.
  constexpr double uniform_open() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound). Lemire's multiply-shift; the bias is below
  /// 2^-32 for the bounds used here.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const unsigned __int128 product =
        static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(bound);
    return static_cast<std::uint64_t>(product >> 64);
  }

  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace blight
