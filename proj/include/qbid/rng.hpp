#pragma once

#include <cstdint>
#include <random>

namespace qbid {

// All randomness in the library flows through std::mt19937_64 (the 64-bit
// Mersenne Twister, whose output stream is fixed by the C++ standard) with
// the uniform-double mapping below. std::uniform_real_distribution is
// implementation-defined, so it is never used; this keeps trajectories
// bit-identical across platforms for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform double in [0, 1) from the top 53 bits.
  double next_double() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in {0, ..., n-1} by rejection (unbiased).
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return v % n;
  }

 private:
  std::mt19937_64 gen_;
};

// SplitMix64 finalizer, used as the documented seed-splitting rule:
// stream k of master seed s is seeded with split_seed(s, k). Each replica
// or trial owns one derived stream; streams are never shared.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream) {
  return mix64(master + 0x9E3779B97F4A7C15ULL * (stream + 1));
}

}  // namespace qbid
