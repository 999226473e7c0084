#pragma once

// Minimal seeded generator with a fully pinned-down output stream.
// std::mt19937 is portable but the standard distributions are not; tests and
// the bench command need uniform doubles that are identical on every
// platform, so the scaling is done here from raw 64-bit output.

#include <cstdint>

namespace layersep {

struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1) with 53 significant bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
};

}  // namespace layersep
