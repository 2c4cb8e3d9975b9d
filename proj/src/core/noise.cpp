#include "core/noise.hpp"

#include <cmath>

namespace obdet {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline std::uint64_t lattice_hash(std::uint64_t seed, std::int64_t ix, std::int64_t iy, std::int64_t iz) {
  std::uint64_t h = static_cast<std::uint64_t>(ix) * 0x9E3779B97F4A7C15ULL;
  h ^= static_cast<std::uint64_t>(iy) * 0xC2B2AE3D27D4EB4FULL;
  h ^= static_cast<std::uint64_t>(iz) * 0x165667B19E3779F9ULL;
  return splitmix64(h ^ seed);
}

inline double fade(double t) { return t * t * (3.0 - 2.0 * t); }

}  // namespace

double gaussian01(std::uint64_t seed, std::uint64_t index, std::uint64_t substream) {
  // u1 nudged away from 0 so the log stays finite.
  double u1 = u01(stream_draw(seed, index, substream * 2));
  double u2 = u01(stream_draw(seed, index, substream * 2 + 1));
  u1 = u1 < 1e-300 ? 1e-300 : u1;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double value_noise3(std::uint64_t seed, double x, double y, double z) {
  const double fx = std::floor(x), fy = std::floor(y), fz = std::floor(z);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const auto iz = static_cast<std::int64_t>(fz);
  const double tx = fade(x - fx), ty = fade(y - fy), tz = fade(z - fz);

  double corner[2][2][2];
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx)
        corner[dz][dy][dx] = u01(lattice_hash(seed, ix + dx, iy + dy, iz + dz));

  const double x00 = corner[0][0][0] + tx * (corner[0][0][1] - corner[0][0][0]);
  const double x01 = corner[0][1][0] + tx * (corner[0][1][1] - corner[0][1][0]);
  const double x10 = corner[1][0][0] + tx * (corner[1][0][1] - corner[1][0][0]);
  const double x11 = corner[1][1][0] + tx * (corner[1][1][1] - corner[1][1][0]);
  const double y0 = x00 + ty * (x01 - x00);
  const double y1 = x10 + ty * (x11 - x10);
  return y0 + tz * (y1 - y0);
}

double fbm3(std::uint64_t seed, double x, double y, double z, int octaves, double base_freq) {
  double sum = 0.0, amp = 1.0, norm = 0.0, freq = base_freq;
  for (int o = 0; o < octaves; ++o) {
    sum += amp * value_noise3(seed + static_cast<std::uint64_t>(o) * 0x517CC1B727220A95ULL,
                              x * freq, y * freq, z * freq);
    norm += amp;
    amp *= 0.5;
    freq *= 2.0;
  }
  return sum / norm;
}

}  // namespace obdet
