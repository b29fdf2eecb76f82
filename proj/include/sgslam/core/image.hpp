#pragma once

#include <cstdint>
#include <vector>

#include "sgslam/core/types.hpp"

namespace sgslam {

// Depth maps mark missing pixels with 0; valid depths are strictly positive.
inline constexpr float kInvalidDepth = 0.0f;
// Label maps mark missing pixels with 0xFFFF; class ids are dense from 0.
inline constexpr uint16_t kInvalidLabel = 0xFFFF;

/// Row-major dense raster.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, T fill = T{}) : width(w), height(h), data(size_t(w) * h, fill) {}

  T& at(int x, int y) { return data[size_t(y) * width + x]; }
  const T& at(int x, int y) const { return data[size_t(y) * width + x]; }
  bool in_bounds(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height;
  }
  size_t size() const { return data.size(); }
  bool same_shape(int w, int h) const { return width == w && height == h; }
};

using DepthMap = Image<float>;
using LabelMap = Image<uint16_t>;

inline bool depth_valid(float d) { return d > 0.0f && std::isfinite(d); }

}  // namespace sgslam
