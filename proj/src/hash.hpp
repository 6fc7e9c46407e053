#pragma once

#include <cstdint>

namespace exwarp::detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
  return splitmix64(seed ^ splitmix64(value));
}

inline std::uint64_t hash_coords(std::uint64_t seed, std::int64_t a, std::int64_t b,
                                 std::uint64_t c = 0) {
  std::uint64_t h = hash_combine(seed, static_cast<std::uint64_t>(a));
  h = hash_combine(h, static_cast<std::uint64_t>(b));
  return hash_combine(h, c);
}

/// Uniform in [0, 1).
inline double unit_interval(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace exwarp::detail
