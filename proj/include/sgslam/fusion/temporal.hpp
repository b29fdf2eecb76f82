#pragma once

// Pose-warp temporal fusion over a K-frame window: forward-splat past depth
// and label predictions into the current frame with a z-buffer, gate by
// depth consistency and dynamic class, then average depth / majority-vote
// labels. Pixels without gated support fall back to the current prediction
// bit-exactly.

#include <deque>
#include <vector>

#include "sgslam/core/geometry.hpp"
#include "sgslam/core/image.hpp"

namespace sgslam {

struct FusionConfig {
  int window = 3;                     // K; 0 disables temporal fusion
  double delta_d = 0.15;              // depth-consistency gate (m)
  std::vector<uint16_t> dynamic_ids;  // label ids of dynamic classes
  double epsilon = 1e-9;              // denominator guard (see fuse())

  void validate() const {
    if (window < 0 || delta_d <= 0) {
      throw Error(ErrorCode::kDomainViolation,
                  "FusionConfig: window >= 0 and delta_d > 0 required");
    }
  }
};

struct WarpedFrame {
  DepthMap depth;   // invalid where no sample splatted
  LabelMap labels;
};

/// Back-projects valid past pixels, transforms them by t_cur_past, and
/// reprojects into the current frame. The nearest sample wins each target
/// pixel; its label rides along (nearest-neighbor semantics).
inline WarpedFrame warp_frame(const DepthMap& past_depth,
                              const LabelMap& past_labels,
                              const Pose& t_cur_past,
                              const CameraIntrinsics& k) {
  if (!past_labels.same_shape(past_depth.width, past_depth.height)) {
    throw Error(ErrorCode::kDomainViolation, "warp_frame: shape mismatch");
  }
  WarpedFrame out;
  out.depth = DepthMap(k.width, k.height, kInvalidDepth);
  out.labels = LabelMap(k.width, k.height, kInvalidLabel);
  Image<float> zbuf(k.width, k.height, std::numeric_limits<float>::infinity());

  const Mat3 rot = t_cur_past.rotation_matrix();
  const Vec3 t = t_cur_past.translation;
  for (int y = 0; y < past_depth.height; ++y) {
    for (int x = 0; x < past_depth.width; ++x) {
      const float d = past_depth.at(x, y);
      if (!depth_valid(d)) continue;
      const Vec3 p_cur = rot * backproject(Vec2(x, y), double(d), k) + t;
      if (p_cur.z() <= 1e-6) continue;
      const auto [px, depth] = project(p_cur, k);
      const int tx = int(std::lround(px.x()));
      const int ty = int(std::lround(px.y()));
      if (!out.depth.in_bounds(tx, ty)) continue;
      if (float(depth) < zbuf.at(tx, ty)) {
        zbuf.at(tx, ty) = float(depth);
        out.depth.at(tx, ty) = float(depth);
        out.labels.at(tx, ty) = past_labels.at(x, y);
      }
    }
  }
  return out;
}

/// Per-pixel validity gate: the warped sample must exist, differ from the
/// current depth by strictly less than delta_d, and carry a static label.
inline Image<uint8_t> temporal_gate(const WarpedFrame& warped,
                                    const DepthMap& current,
                                    const FusionConfig& cfg) {
  cfg.validate();
  if (!current.same_shape(warped.depth.width, warped.depth.height)) {
    throw Error(ErrorCode::kDomainViolation, "temporal_gate: shape mismatch");
  }
  Image<uint8_t> alpha(current.width, current.height, 0);
  for (size_t i = 0; i < current.size(); ++i) {
    const float wd = warped.depth.data[i];
    const float cd = current.data[i];
    if (!depth_valid(wd) || !depth_valid(cd)) continue;
    if (!(std::abs(double(wd) - double(cd)) < cfg.delta_d)) continue;
    bool dynamic = false;
    for (uint16_t d : cfg.dynamic_ids) {
      dynamic |= (warped.labels.data[i] == d);
    }
    if (dynamic || warped.labels.data[i] == kInvalidLabel) continue;
    alpha.data[i] = 1;
  }
  return alpha;
}

struct FusedFrame {
  DepthMap depth;
  LabelMap labels;
  Image<uint16_t> support;   // gated samples per pixel
  Image<uint8_t> fallback;   // 1 where the current prediction was used
};

/// Fuses the gated warped window with the current prediction: mean depth and
/// majority-vote labels where support exists (ties to the lowest class id),
/// current-frame passthrough elsewhere. window size 0 returns the current
/// frame verbatim.
inline FusedFrame fuse(const DepthMap& current_depth,
                       const LabelMap& current_labels,
                       const std::vector<WarpedFrame>& gated_window,
                       const std::vector<Image<uint8_t>>& gates,
                       const FusionConfig& cfg) {
  cfg.validate();
  if (gated_window.size() != gates.size() ||
      int(gated_window.size()) > std::max(cfg.window, 0)) {
    throw Error(ErrorCode::kDomainViolation, "fuse: window size mismatch");
  }
  FusedFrame out;
  out.depth = current_depth;
  out.labels = current_labels;
  out.support = Image<uint16_t>(current_depth.width, current_depth.height, 0);
  out.fallback = Image<uint8_t>(current_depth.width, current_depth.height, 1);
  if (cfg.window == 0 || gated_window.empty()) return out;

  std::vector<std::pair<uint16_t, int>> votes;
  for (int y = 0; y < current_depth.height; ++y) {
    for (int x = 0; x < current_depth.width; ++x) {
      double sum = 0.0;
      int count = 0;
      votes.clear();
      for (size_t w = 0; w < gated_window.size(); ++w) {
        if (!gates[w].at(x, y)) continue;
        sum += double(gated_window[w].depth.at(x, y));
        ++count;
        const uint16_t label = gated_window[w].labels.at(x, y);
        bool found = false;
        for (auto& [cls, n] : votes) {
          if (cls == label) {
            ++n;
            found = true;
          }
        }
        if (!found) votes.emplace_back(label, 1);
      }
      if (count == 0) continue;  // fallback row already holds the current value
      out.support.at(x, y) = uint16_t(count);
      out.fallback.at(x, y) = 0;
      // Exact mean over the gated samples. The configured epsilon guard is
      // only needed when dividing at zero support, and that case is handled
      // by the fallback branch above, so it must not bias the mean here.
      out.depth.at(x, y) = float(sum / double(count));
      uint16_t best = kInvalidLabel;
      int best_votes = -1;
      for (auto& [cls, n] : votes) {
        if (n > best_votes || (n == best_votes && cls < best)) {
          best = cls;
          best_votes = n;
        }
      }
      out.labels.at(x, y) = best;
    }
  }
  return out;
}

/// Ring buffer of raw past predictions with their estimated camera poses;
/// re-warps the stored window into each new frame and fuses.
class TemporalFusion {
 public:
  TemporalFusion(const FusionConfig& cfg, const CameraIntrinsics& k)
      : cfg_(cfg), k_(k) {
    cfg_.validate();
  }

  /// Produces the fused frame for the current prediction, then pushes the
  /// raw prediction into the window.
  FusedFrame process(const DepthMap& depth, const LabelMap& labels,
                     const Pose& t_world_cam) {
    std::vector<WarpedFrame> warped;
    std::vector<Image<uint8_t>> gates;
    if (cfg_.window > 0) {
      const Pose t_cam_world = t_world_cam.inverse();
      for (const auto& past : window_) {
        WarpedFrame w =
            warp_frame(past.depth, past.labels, t_cam_world * past.t_world_cam, k_);
        gates.push_back(temporal_gate(w, depth, cfg_));
        warped.push_back(std::move(w));
      }
    }
    FusedFrame fused = fuse(depth, labels, warped, gates, cfg_);
    if (cfg_.window > 0) {
      window_.push_back({depth, labels, t_world_cam});
      while (int(window_.size()) > cfg_.window) window_.pop_front();
    }
    return fused;
  }

  const FusionConfig& config() const { return cfg_; }

 private:
  struct PastFrame {
    DepthMap depth;
    LabelMap labels;
    Pose t_world_cam;
  };
  FusionConfig cfg_;
  CameraIntrinsics k_;
  std::deque<PastFrame> window_;
};

}  // namespace sgslam
