#pragma once

#include <cstdint>

namespace plaols {

/// SplitMix64 finalizer (Stafford variant 13).
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed of substream (a, b) of `master`:
///   mix64(mix64(master ^ mix64(a + K1)) ^ mix64(b + K2))
/// with K1 = 0x9E3779B97F4A7C15 and K2 = 0xC2B2AE3D27D4EB4F.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) noexcept;

/// Counter-based generator: the k-th output (k = 1, 2, ...) is
/// mix64(seed + k * 0x9E3779B97F4A7C15), i.e. a SplitMix64 stream. Draws depend
/// only on the seed and the number of draws taken, never on threads.
///
/// Uniforms are ((u >> 11) + 0.5) * 2^-53, strictly inside (0, 1). Normals come
/// from Box-Muller on two consecutive uniforms; both outputs are used in order
/// (cos branch first).
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) noexcept : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() noexcept;
  double uniform() noexcept;
  double normal() noexcept;

  /// Independent stream derived from this generator's seed (not its position).
  SeededRng substream(std::uint64_t a, std::uint64_t b = 0) const noexcept {
    return SeededRng(derive_seed(seed_, a, b));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace plaols
