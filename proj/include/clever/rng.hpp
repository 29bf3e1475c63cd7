#pragma once

#include <cstdint>
#include <random>

namespace clever {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derived seed streams: the stream for (seed, i, j, ...) depends only on the
// key, never on draw order or thread, so parallel and serial runs agree
// bitwise.
inline std::uint64_t derive_seed(std::uint64_t seed) { return splitmix64(seed); }

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, Rest... rest) {
  return derive_seed(splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL)), rest...);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64{seed}; }

}  // namespace clever
