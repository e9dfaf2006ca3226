#pragma once

#include <cstdint>
#include <random>

namespace npsim {

/// SplitMix64 finalizer. Used to derive sub-stream seeds and as the flow-key
/// mixer; its constants are part of the reproducibility contract.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent random sub-streams derived from one scenario seed.
enum class RngStream : std::uint64_t {
  Traffic = 1,
  Red = 2,
};

/// Deterministic generator: std::mt19937_64 (bit-exact by the standard)
/// with in-house integer and unit-interval draws, since the standard
/// distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, RngStream stream = RngStream::Traffic);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [lo, hi], unbiased by rejection.
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace npsim
