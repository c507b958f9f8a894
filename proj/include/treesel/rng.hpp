#pragma once

#include <cstdint>

namespace treesel {

/// splitmix64: the generator every sensor shares. Fully specified so that
/// sequences are bit-identical across platforms and compilers.
class SplitMix64 {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  constexpr explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  constexpr std::uint64_t next() noexcept {
    state_ += kGamma;
    return mix(state_);
  }

  /// Uniform double in [0, 1) built from the top 53 bits.
  constexpr double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

struct Draw {
  double alpha;
  std::uint64_t next_state;
};

constexpr Draw shared_draw(std::uint64_t state) noexcept {
  SplitMix64 g(state);
  const double alpha = g.uniform();
  return {alpha, g.state()};
}

/// Independent sub-seed for stream `index` of a run seeded with `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return SplitMix64::mix(SplitMix64::mix(seed) ^ (SplitMix64::kGamma * (index + 1)));
}

}  // namespace treesel
