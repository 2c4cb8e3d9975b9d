#pragma once

#include <cstdint>

namespace obdet {

// All randomness in synthetic data generation derives from SplitMix64 so that
// datasets regenerate bit-identically on any platform and at any worker count.
// Per-pixel draws are keyed by (seed, pixel index, substream) instead of
// sequential generator state.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (b * 0xC2B2AE3D27D4EB4FULL));
}

// Keyed stream: one independent 64-bit draw per (seed, index, substream).
inline std::uint64_t stream_draw(std::uint64_t seed, std::uint64_t index, std::uint64_t substream) {
  return splitmix64(splitmix64(seed ^ 0x165667B19E3779F9ULL * substream) ^ index * 0xD6E8FEB86659FD93ULL);
}

// Uniform double in [0, 1) from the top 53 bits.
inline double u01(std::uint64_t h) {
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

// One standard normal draw via Box-Muller from two keyed uniforms.
double gaussian01(std::uint64_t seed, std::uint64_t index, std::uint64_t substream);

// Smooth 3D value noise on a unit lattice, range [0, 1].
double value_noise3(std::uint64_t seed, double x, double y, double z);

// Multi-octave value noise, range [0, 1]. base_freq is in cycles per meter.
double fbm3(std::uint64_t seed, double x, double y, double z, int octaves, double base_freq);

}  // namespace obdet
