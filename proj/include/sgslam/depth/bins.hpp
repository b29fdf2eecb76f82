#pragma once

// Adaptive depth-bin arithmetic: softmax widths over a fixed metric range,
// cumulative edges, midpoint centers, per-pixel expectation, and the final
// residual-offset refinement with range clamping.

#include <algorithm>
#include <cmath>

#include "sgslam/core/image.hpp"
#include "sgslam/core/types.hpp"

namespace sgslam {

struct BinConfig {
  double d_min = 0.1;
  double d_max = 10.0;
  int n_bins = 64;

  void validate() const {
    if (!(d_min > 0.0) || !(d_max > d_min) || n_bins < 1) {
      throw Error(ErrorCode::kDomainViolation,
                  "BinConfig requires 0 < d_min < d_max and n_bins >= 1");
    }
  }
};

struct BinPartition {
  VecX widths;   // normalized, sums to 1
  VecX edges;    // n_bins + 1 entries, edges[0] = d_min, edges[n] = d_max
  VecX centers;  // midpoints of consecutive edges
};

inline VecX softmax(const VecX& logits) {
  const double m = logits.maxCoeff();
  VecX e = (logits.array() - m).exp();
  return e / e.sum();
}

inline BinPartition build_bins(const VecX& logits, const BinConfig& cfg) {
  cfg.validate();
  if (logits.size() != cfg.n_bins) {
    throw Error(ErrorCode::kDomainViolation, "build_bins: logits size != n_bins");
  }
  if (!logits.allFinite()) {
    throw Error(ErrorCode::kDomainViolation, "build_bins: non-finite logits");
  }
  BinPartition part;
  part.widths = softmax(logits);
  const double range = cfg.d_max - cfg.d_min;
  part.edges.resize(cfg.n_bins + 1);
  part.edges[0] = cfg.d_min;
  double acc = 0.0;
  for (int i = 0; i < cfg.n_bins; ++i) {
    acc += part.widths[i];
    part.edges[i + 1] = cfg.d_min + range * acc;
  }
  part.centers.resize(cfg.n_bins);
  for (int i = 0; i < cfg.n_bins; ++i) {
    part.centers[i] = 0.5 * (part.edges[i] + part.edges[i + 1]);
  }
  return part;
}

/// Expectation over bin centers for one pixel's bin probabilities.
inline double expected_depth_pixel(const VecX& probs, const BinPartition& part) {
  if (probs.size() != part.centers.size()) {
    throw Error(ErrorCode::kDomainViolation,
                "expected_depth: probs size != n_bins");
  }
  if (probs.minCoeff() < 0.0 || std::abs(probs.sum() - 1.0) > 1e-6) {
    throw Error(ErrorCode::kNonSimplex,
                "expected_depth: probabilities must be a simplex");
  }
  return probs.dot(part.centers);
}

/// Row-per-pixel variant; each row must be a simplex over the bins.
inline VecX expected_depth(const MatX& probs, const BinPartition& part) {
  VecX out(probs.rows());
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    out[r] = expected_depth_pixel(probs.row(r).transpose(), part);
  }
  return out;
}

/// Adds the residual offset and clamps into [d_min, d_max].
inline VecX refine_and_clamp(const VecX& coarse, const VecX& offsets,
                             const BinConfig& cfg) {
  cfg.validate();
  if (coarse.size() != offsets.size()) {
    throw Error(ErrorCode::kDomainViolation,
                "refine_and_clamp: shape mismatch");
  }
  return (coarse + offsets).cwiseMax(cfg.d_min).cwiseMin(cfg.d_max);
}

inline DepthMap refine_and_clamp(const DepthMap& coarse, const DepthMap& offsets,
                                 const BinConfig& cfg) {
  cfg.validate();
  if (!offsets.same_shape(coarse.width, coarse.height)) {
    throw Error(ErrorCode::kDomainViolation,
                "refine_and_clamp: shape mismatch");
  }
  DepthMap out(coarse.width, coarse.height);
  for (size_t i = 0; i < coarse.size(); ++i) {
    out.data[i] = static_cast<float>(std::clamp(
        double(coarse.data[i]) + double(offsets.data[i]), cfg.d_min, cfg.d_max));
  }
  return out;
}

}  // namespace sgslam
