#pragma once

// Measurement preparation for the filter: descriptor matching with ratio and
// mutual-consistency checks, track bookkeeping, semantic weighting from the
// label map, and sparse depth-candidate selection with motion/reprojection
// gating and fixed-stride thinning.

#include <algorithm>
#include <limits>
#include <map>
#include <vector>

#include "sgslam/core/geometry.hpp"
#include "sgslam/core/image.hpp"
#include "sgslam/sim/keypoints.hpp"

namespace sgslam {

struct GateConfig {
  double tau_omega = 0.8;      // rad/s, frame-wide angular-velocity gate
  double tau_pi = 2.0;         // px, per-factor reprojection gate
  int s_d = 4;                 // fixed stride over surviving candidates
  double lambda_d = 1.0;       // sparse-depth information weight
  double sigma0 = 0.05;        // m, additive depth noise
  double sigma1 = 0.02;        // depth-proportional noise
  double ratio_threshold = 0.7;
  double huber_delta = 1.345;  // on normalized residuals
  double sigma_px = 1.0;       // px, visual whitening

  void validate() const {
    if (tau_omega <= 0 || tau_pi <= 0 || s_d <= 0 || lambda_d <= 0 ||
        sigma0 <= 0 || sigma1 <= 0 || ratio_threshold <= 0 ||
        ratio_threshold >= 1 || huber_delta <= 0 || sigma_px <= 0) {
      throw Error(ErrorCode::kDomainViolation, "GateConfig: invalid field");
    }
  }
};

inline double depth_noise_sigma(double z, const GateConfig& cfg) {
  return cfg.sigma0 + cfg.sigma1 * z;
}

// ---------------------------------------------------------------------------
// Matching
// ---------------------------------------------------------------------------

struct Match {
  int prev_index = -1;
  int curr_index = -1;
  double distance = 0.0;
};

/// Nearest-descriptor matches that pass the best/second-best ratio test in
/// both directions and are mutual nearest neighbors; one-to-one by
/// construction, symmetric under swapping the inputs.
inline std::vector<Match> match_frames(const std::vector<KeypointObs>& prev,
                                       const std::vector<KeypointObs>& curr,
                                       double ratio_threshold) {
  std::vector<Match> out;
  if (prev.empty() || curr.empty()) return out;

  const int np = int(prev.size()), nc = int(curr.size());
  MatX dist(np, nc);
  for (int i = 0; i < np; ++i) {
    for (int j = 0; j < nc; ++j) {
      dist(i, j) = (prev[i].descriptor - curr[j].descriptor).norm();
    }
  }
  auto best_two = [](const VecX& row) {
    int best = -1;
    double d0 = std::numeric_limits<double>::infinity();
    double d1 = std::numeric_limits<double>::infinity();
    for (int j = 0; j < row.size(); ++j) {
      if (row[j] < d0) {
        d1 = d0;
        d0 = row[j];
        best = j;
      } else if (row[j] < d1) {
        d1 = row[j];
      }
    }
    return std::tuple<int, double, double>{best, d0, d1};
  };

  std::vector<int> fwd(np, -1), bwd(nc, -1);
  std::vector<bool> fwd_ok(np, false), bwd_ok(nc, false);
  for (int i = 0; i < np; ++i) {
    auto [j, d0, d1] = best_two(dist.row(i).transpose());
    fwd[i] = j;
    fwd_ok[i] = std::isfinite(d0) && (d1 == std::numeric_limits<double>::infinity() ||
                                      d0 < ratio_threshold * d1);
  }
  for (int j = 0; j < nc; ++j) {
    auto [i, d0, d1] = best_two(dist.col(j));
    bwd[j] = i;
    bwd_ok[j] = std::isfinite(d0) && (d1 == std::numeric_limits<double>::infinity() ||
                                      d0 < ratio_threshold * d1);
  }
  for (int i = 0; i < np; ++i) {
    const int j = fwd[i];
    if (j >= 0 && bwd[j] == i && fwd_ok[i] && bwd_ok[j]) {
      out.push_back({i, j, dist(i, j)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Semantic weighting
// ---------------------------------------------------------------------------

/// 0 iff the label under the pixel belongs to the dynamic class set.
inline int semantic_weight(const Vec2& pixel, const LabelMap& labels,
                           const std::vector<uint16_t>& dynamic_ids) {
  const int x = int(std::lround(pixel.x()));
  const int y = int(std::lround(pixel.y()));
  if (!labels.in_bounds(x, y)) {
    throw Error(ErrorCode::kOutOfBounds, "semantic_weight: pixel out of bounds");
  }
  const uint16_t label = labels.at(x, y);
  for (uint16_t d : dynamic_ids) {
    if (label == d) return 0;
  }
  return 1;
}

// ---------------------------------------------------------------------------
// Track management
// ---------------------------------------------------------------------------

struct TrackObservation {
  int frame = -1;
  Vec2 pixel = Vec2::Zero();
  double depth_sample = -1.0;  // <= 0 when the depth map was invalid there
  int semantic_weight = 1;
  bool gate = true;
};

struct Track {
  int64_t id = -1;
  bool has_landmark = false;
  Vec3 landmark = Vec3::Zero();  // estimator-frame position once initialized
  std::vector<TrackObservation> observations;
  int misses = 0;  // consecutive frames without a match

  const TrackObservation* observation_in(int frame) const {
    for (const auto& o : observations) {
      if (o.frame == frame) return &o;
    }
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Depth-candidate selection
// ---------------------------------------------------------------------------

struct DepthCandidate {
  int64_t track_id = -1;
  Vec2 pixel = Vec2::Zero();
  double z = 0.0;        // sampled predicted depth (m)
  double sigma_d = 0.0;  // sigma0 + sigma1 * z
  double gradient_score = 0.0;
  int weight = 1;        // eta = g * w; selection implies g = w = 1
};

/// 3x3 central-difference depth gradient magnitude, invalid-safe.
inline double depth_gradient_magnitude(const DepthMap& depth, int x, int y) {
  auto sample = [&](int sx, int sy) -> double {
    sx = std::clamp(sx, 0, depth.width - 1);
    sy = std::clamp(sy, 0, depth.height - 1);
    return depth_valid(depth.at(sx, sy)) ? double(depth.at(sx, sy)) : 0.0;
  };
  const double gx = 0.5 * (sample(x + 1, y) - sample(x - 1, y));
  const double gy = 0.5 * (sample(x, y + 1) - sample(x, y - 1));
  return std::sqrt(gx * gx + gy * gy);
}

struct TrackedKeypoint {
  int64_t track_id = -1;
  Vec2 pixel = Vec2::Zero();
  int semantic_weight = 1;
  double reprojection_residual = 0.0;  // px, against the predicted landmark
  bool has_landmark = false;
};

/// Selection pipeline: drop invalid depth, drop masked (w = 0), drop the
/// whole frame when the angular rate exceeds tau_omega, drop per-factor
/// reprojection outliers, then keep every s_d-th survivor in row-major image
/// order. The gradient score rides along on each retained factor.
inline std::vector<DepthCandidate> select_depth_candidates(
    const std::vector<TrackedKeypoint>& tracked, const DepthMap& depth,
    double omega_norm, const GateConfig& cfg) {
  cfg.validate();
  std::vector<DepthCandidate> survivors;
  if (omega_norm > cfg.tau_omega) return survivors;  // frame-wide motion gate

  for (const auto& kp : tracked) {
    if (!kp.has_landmark) continue;
    if (kp.semantic_weight == 0) continue;
    if (kp.reprojection_residual > cfg.tau_pi) continue;
    const int x = int(std::lround(kp.pixel.x()));
    const int y = int(std::lround(kp.pixel.y()));
    if (!depth.in_bounds(x, y) || !depth_valid(depth.at(x, y))) continue;
    DepthCandidate c;
    c.track_id = kp.track_id;
    c.pixel = kp.pixel;
    c.z = double(depth.at(x, y));
    c.sigma_d = depth_noise_sigma(c.z, cfg);
    c.gradient_score = depth_gradient_magnitude(depth, x, y);
    survivors.push_back(c);
  }

  // Row-major image order, then fixed-stride thinning.
  std::sort(survivors.begin(), survivors.end(),
            [&](const DepthCandidate& a, const DepthCandidate& b) {
              const int ay = int(std::lround(a.pixel.y()));
              const int by = int(std::lround(b.pixel.y()));
              if (ay != by) return ay < by;
              const int ax = int(std::lround(a.pixel.x()));
              const int bx = int(std::lround(b.pixel.x()));
              if (ax != bx) return ax < bx;
              return a.track_id < b.track_id;
            });
  std::vector<DepthCandidate> kept;
  for (size_t i = 0; i < survivors.size(); i += size_t(cfg.s_d)) {
    kept.push_back(survivors[i]);
  }
  return kept;
}

// ---------------------------------------------------------------------------
// Huber loss
// ---------------------------------------------------------------------------

struct HuberResult {
  double cost = 0.0;
  double irls_weight = 1.0;
};

/// rho(r) = r^2/2 inside |r| <= delta, delta(|r| - delta/2) outside; the IRLS
/// weight is the usual delta/|r| reweighting.
inline HuberResult huber(double r, double delta) {
  if (delta <= 0) {
    throw Error(ErrorCode::kDomainViolation, "huber: delta must be positive");
  }
  HuberResult out;
  const double a = std::abs(r);
  if (a <= delta) {
    out.cost = 0.5 * r * r;
    out.irls_weight = 1.0;
  } else {
    out.cost = delta * (a - 0.5 * delta);
    out.irls_weight = delta / a;
  }
  return out;
}

}  // namespace sgslam
