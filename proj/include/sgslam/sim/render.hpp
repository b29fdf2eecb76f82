#pragma once

// Exact ray-box depth/label rendering with the configured noise model:
// depth sigma(z) = sigma0 + sigma1*z, a per-frame flicker offset shared by
// every pixel, and i.i.d. label flips.

#include <limits>
#include <vector>

#include "sgslam/core/geometry.hpp"
#include "sgslam/core/image.hpp"
#include "sgslam/core/rng.hpp"
#include "sgslam/sim/scene.hpp"

namespace sgslam {

/// Entry parameter of a ray into a box, or +inf when missed. The ray is
/// o + t*d with unnormalized d; callers pick d so t equals camera depth.
inline double ray_box_entry(const Vec3& o, const Vec3& d, const AABox& b) {
  double t_lo = 1e-9;
  double t_hi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < 1e-15) {
      if (o[i] < b.min[i] || o[i] > b.max[i]) {
        return std::numeric_limits<double>::infinity();
      }
      continue;
    }
    double t0 = (b.min[i] - o[i]) / d[i];
    double t1 = (b.max[i] - o[i]) / d[i];
    if (t0 > t1) std::swap(t0, t1);
    t_lo = std::max(t_lo, t0);
    t_hi = std::min(t_hi, t1);
    if (t_lo > t_hi) return std::numeric_limits<double>::infinity();
  }
  return t_lo;
}

struct RenderResult {
  DepthMap depth;
  LabelMap labels;
};

/// Nearest-surface hit over static boxes plus the agents at their time-t
/// positions. Misses and hits beyond max_range are marked invalid.
inline RenderResult render_perception(const World& world, const SceneSpec& spec,
                                      double t, const Pose& t_wc,
                                      const CameraIntrinsics& k,
                                      const NoiseSpec& noise, uint64_t frame_index,
                                      double max_range = 30.0) {
  RenderResult out;
  out.depth = DepthMap(k.width, k.height, kInvalidDepth);
  out.labels = LabelMap(k.width, k.height, kInvalidLabel);

  std::vector<std::pair<AABox, uint16_t>> agent_boxes;
  for (const auto& a : spec.agents) {
    agent_boxes.emplace_back(agent_box(a, agent_position(a, t), spec.rooms.front().floor_z),
                             uint16_t(spec.label_id(a.cls)));
  }

  const Mat3 r_wc = t_wc.rotation_matrix();
  const Vec3 origin = t_wc.translation;

  std::mt19937_64 depth_rng =
      make_rng(noise.seed, RngStream::kDepthNoise, frame_index);
  std::mt19937_64 label_rng =
      make_rng(noise.seed, RngStream::kLabelFlip, frame_index);
  std::mt19937_64 flicker_rng =
      make_rng(noise.seed, RngStream::kFlicker, frame_index);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double flicker = 0.0;
  if (noise.flicker_amplitude > 0) {
    flicker = (2.0 * uni(flicker_rng) - 1.0) * noise.flicker_amplitude;
  }

  const int n_labels = int(spec.label_set.size());
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      const Vec3 dir_w = r_wc * pixel_ray(Vec2(x, y), k);
      double best = std::numeric_limits<double>::infinity();
      uint16_t label = kInvalidLabel;
      for (const auto& wb : world.boxes) {
        const double hit = ray_box_entry(origin, dir_w, wb.box);
        if (hit < best) {
          best = hit;
          label = wb.label;
        }
      }
      for (const auto& [box, lbl] : agent_boxes) {
        const double hit = ray_box_entry(origin, dir_w, box);
        if (hit < best) {
          best = hit;
          label = lbl;
        }
      }
      if (!std::isfinite(best) || best > max_range) continue;

      double depth = best;
      if (noise.depth_sigma0 > 0 || noise.depth_sigma1 > 0) {
        depth += (noise.depth_sigma0 + noise.depth_sigma1 * best) * gauss(depth_rng);
      }
      depth += flicker;
      depth = std::min(std::max(depth, 1e-3), max_range);
      out.depth.at(x, y) = float(depth);

      if (noise.label_flip_prob > 0 && uni(label_rng) < noise.label_flip_prob &&
          n_labels > 1) {
        const int shift = 1 + int(uni(label_rng) * (n_labels - 1));
        label = uint16_t((int(label) + shift) % n_labels);
      }
      out.labels.at(x, y) = label;
    }
  }
  return out;
}

}  // namespace sgslam
