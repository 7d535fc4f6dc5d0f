#pragma once

#include <cstdint>

namespace nicherec {

// SplitMix64 (Steele, Lea & Flood 2014; fixed-increment variant by Vigna).
// One generator per simulated episode. Streams are derived from
// (master_seed, stream_index), so results never depend on how episodes are
// distributed over worker threads.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on the open interval (0,1). Never returns 0 or 1, so ln(u) and
  // ln(1-u) are always finite.
  double next_open01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Independent stream for a given (seed, index) pair; counter-based so any
// episode's generator can be rebuilt in isolation.
inline SplitMix64 make_stream(std::uint64_t master_seed, std::uint64_t index) {
  return SplitMix64(mix64(master_seed + 0x9E3779B97F4A7C15ULL * (index + 1)));
}

}  // namespace nicherec
