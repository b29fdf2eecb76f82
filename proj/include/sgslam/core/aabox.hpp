#pragma once

#include <algorithm>
#include <limits>

#include "sgslam/core/types.hpp"

namespace sgslam {

/// Axis-aligned box, min corner inclusive.
struct AABox {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  AABox() = default;
  AABox(const Vec3& mn, const Vec3& mx) : min(mn), max(mx) {}

  bool valid() const { return (max.array() >= min.array()).all(); }
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }

  double volume() const {
    if (!valid()) return 0.0;
    Vec3 e = extent();
    return e.x() * e.y() * e.z();
  }

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }

  bool contains_xy(double x, double y) const {
    return x >= min.x() && x <= max.x() && y >= min.y() && y <= max.y();
  }

  void expand(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }

  AABox intersection(const AABox& o) const {
    return AABox(min.cwiseMax(o.min), max.cwiseMin(o.max));
  }

  double iou(const AABox& o) const {
    AABox inter = intersection(o);
    if (!inter.valid()) return 0.0;
    const double vi = inter.volume();
    const double vu = volume() + o.volume() - vi;
    return vu <= 0.0 ? 0.0 : vi / vu;
  }

  double overlap_area_xy(const AABox& o) const {
    const double w = std::min(max.x(), o.max.x()) - std::max(min.x(), o.min.x());
    const double h = std::min(max.y(), o.max.y()) - std::max(min.y(), o.min.y());
    return (w > 0 && h > 0) ? w * h : 0.0;
  }
};

}  // namespace sgslam
