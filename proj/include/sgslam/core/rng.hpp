#pragma once

#include <cstdint>
#include <random>

namespace sgslam {

/// splitmix64 step; used to derive independent named streams from one seed so
/// per-frame draws stay identical regardless of evaluation order.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t seed, uint64_t stream, uint64_t index = 0) {
  return splitmix64(splitmix64(seed ^ (0x853c49e6748fea9bull * stream)) + index);
}

// Stream tags for the simulator; keep stable, they define reproducibility.
enum class RngStream : uint64_t {
  kImu = 1,
  kDepthNoise = 2,
  kLabelFlip = 3,
  kFlicker = 4,
  kPixelNoise = 5,
  kDescriptorNoise = 6,
  kLandmarkSampling = 7,
  kDescriptorInit = 8,
  kLoopEdgeNoise = 9,
};

inline std::mt19937_64 make_rng(uint64_t seed, RngStream stream, uint64_t index = 0) {
  return std::mt19937_64(derive_seed(seed, static_cast<uint64_t>(stream), index));
}

}  // namespace sgslam
