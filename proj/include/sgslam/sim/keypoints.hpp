#pragma once

// Persistent landmarks with fixed random unit descriptors, sampled on static
// surfaces and on dynamic agents, plus per-frame observation generation with
// occlusion checks and pixel/descriptor noise.

#include <vector>

#include "sgslam/core/geometry.hpp"
#include "sgslam/core/rng.hpp"
#include "sgslam/sim/render.hpp"

namespace sgslam {

inline constexpr int kDescriptorDim = 32;

struct Landmark {
  int64_t id = -1;
  Vec3 position = Vec3::Zero();  // world; for agent landmarks, the offset
  int agent_index = -1;          // -1 for static landmarks
  VecX descriptor;               // fixed unit vector
};

struct KeypointObs {
  Vec2 pixel = Vec2::Zero();
  int64_t landmark_id = -1;  // ground-truth identity, for oracles only
  VecX descriptor;
};

inline VecX random_unit_descriptor(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  VecX d(kDescriptorDim);
  for (int i = 0; i < kDescriptorDim; ++i) d[i] = gauss(rng);
  d.normalize();
  return d;
}

/// Samples `n_static` landmarks on static box faces (area-weighted) and
/// `n_per_agent` on each agent's side faces.
inline std::vector<Landmark> sample_landmarks(const World& world,
                                              const SceneSpec& spec,
                                              int n_static, int n_per_agent,
                                              uint64_t seed) {
  std::mt19937_64 rng = make_rng(seed, RngStream::kLandmarkSampling);
  std::mt19937_64 desc_rng = make_rng(seed, RngStream::kDescriptorInit);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  // Candidate faces weighted by area; a face qualifies when its outward side
  // touches some room's interior volume (others can never be observed).
  struct Face {
    const AABox* box;
    int axis;
    int side;  // 0 -> min plane, 1 -> max plane
    double area;
  };
  auto faces_into_room = [&](const AABox& box, int axis, int side) {
    Vec3 probe = box.center();
    probe[axis] = (side ? box.max[axis] : box.min[axis]) + (side ? 0.05 : -0.05);
    for (const auto& r : spec.rooms) {
      if (probe.x() > r.min.x() && probe.x() < r.max.x() &&
          probe.y() > r.min.y() && probe.y() < r.max.y() &&
          probe.z() > r.floor_z && probe.z() < r.floor_z + r.height) {
        return true;
      }
    }
    return false;
  };
  std::vector<Face> faces;
  double total_area = 0.0;
  for (const auto& wb : world.boxes) {
    const Vec3 e = wb.box.extent();
    const double areas[3] = {e.y() * e.z(), e.x() * e.z(), e.x() * e.y()};
    for (int axis = 0; axis < 3; ++axis) {
      for (int side = 0; side < 2; ++side) {
        if (!faces_into_room(wb.box, axis, side)) continue;
        faces.push_back({&wb.box, axis, side, areas[axis]});
        total_area += areas[axis];
      }
    }
  }

  std::vector<Landmark> out;
  int64_t next_id = 0;
  for (int i = 0; i < n_static && total_area > 0; ++i) {
    double pick = uni(rng) * total_area;
    const Face* chosen = &faces.back();
    for (const auto& f : faces) {
      pick -= f.area;
      if (pick <= 0) {
        chosen = &f;
        break;
      }
    }
    Vec3 p;
    for (int axis = 0; axis < 3; ++axis) {
      if (axis == chosen->axis) {
        p[axis] = chosen->side ? chosen->box->max[axis] : chosen->box->min[axis];
        // Nudge off the surface so the landmark's own box does not occlude it.
        p[axis] += (chosen->side ? 1.0 : -1.0) * 1e-5;
      } else {
        p[axis] = chosen->box->min[axis] +
                  uni(rng) * (chosen->box->max[axis] - chosen->box->min[axis]);
      }
    }
    Landmark lm;
    lm.id = next_id++;
    lm.position = p;
    lm.descriptor = random_unit_descriptor(desc_rng);
    out.push_back(lm);
  }

  for (size_t ai = 0; ai < spec.agents.size(); ++ai) {
    const AgentSpec& a = spec.agents[ai];
    for (int i = 0; i < n_per_agent; ++i) {
      // Offset relative to the agent center column, on one of 4 side faces.
      const int face = int(uni(rng) * 4.0) % 4;
      const double u = uni(rng), v = uni(rng);
      Vec3 off;
      const double hx = 0.5 * a.size.x(), hy = 0.5 * a.size.y();
      switch (face) {
        case 0: off = Vec3(hx + 1e-5, (2 * u - 1) * hy, v * a.size.z()); break;
        case 1: off = Vec3(-hx - 1e-5, (2 * u - 1) * hy, v * a.size.z()); break;
        case 2: off = Vec3((2 * u - 1) * hx, hy + 1e-5, v * a.size.z()); break;
        default: off = Vec3((2 * u - 1) * hx, -hy - 1e-5, v * a.size.z()); break;
      }
      Landmark lm;
      lm.id = next_id++;
      lm.position = off;
      lm.agent_index = int(ai);
      lm.descriptor = random_unit_descriptor(desc_rng);
      out.push_back(lm);
    }
  }
  return out;
}

inline Vec3 landmark_world_position(const Landmark& lm, const SceneSpec& spec,
                                    double t) {
  if (lm.agent_index < 0) return lm.position;
  const Vec2 base = agent_position(spec.agents[lm.agent_index], t);
  return Vec3(base.x(), base.y(), spec.rooms.front().floor_z) + lm.position;
}

/// Observations of all visible landmarks at time t from camera pose t_wc.
/// Visibility requires positive depth, an in-bounds projection, and a clear
/// line of sight against the static world and agent boxes.
inline std::vector<KeypointObs> observe_keypoints(
    const World& world, const SceneSpec& spec,
    const std::vector<Landmark>& landmarks, double t, const Pose& t_wc,
    const CameraIntrinsics& k, const NoiseSpec& noise, uint64_t frame_index) {
  std::mt19937_64 px_rng = make_rng(noise.seed, RngStream::kPixelNoise, frame_index);
  std::mt19937_64 desc_rng =
      make_rng(noise.seed, RngStream::kDescriptorNoise, frame_index);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<AABox> agent_boxes;
  for (const auto& a : spec.agents) {
    agent_boxes.push_back(agent_box(a, agent_position(a, t), spec.rooms.front().floor_z));
  }

  const Pose t_cw = t_wc.inverse();
  std::vector<KeypointObs> out;
  for (const auto& lm : landmarks) {
    const Vec3 p_w = landmark_world_position(lm, spec, t);
    const Vec3 p_c = t_cw * p_w;
    if (p_c.z() < 0.05) continue;
    auto [pixel, depth] = project(p_c, k);
    if (!k.in_bounds(pixel)) continue;

    // Occlusion: the nearest surface along the exact ray must not be closer
    // than the landmark itself.
    const Vec3 dir_w = p_w - t_wc.translation;
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& wb : world.boxes) {
      nearest = std::min(nearest, ray_box_entry(t_wc.translation, dir_w, wb.box));
      if (nearest < 1.0 - 1e-4) break;
    }
    for (const auto& ab : agent_boxes) {
      nearest = std::min(nearest, ray_box_entry(t_wc.translation, dir_w, ab));
    }
    // dir_w reaches the landmark at parameter 1.
    if (nearest < 1.0 - 1e-4) continue;

    KeypointObs obs;
    obs.landmark_id = lm.id;
    obs.pixel = pixel;
    if (noise.pixel_noise > 0) {
      obs.pixel += noise.pixel_noise * Vec2(gauss(px_rng), gauss(px_rng));
    }
    obs.descriptor = lm.descriptor;
    if (noise.descriptor_noise > 0) {
      for (int i = 0; i < obs.descriptor.size(); ++i) {
        obs.descriptor[i] += noise.descriptor_noise * gauss(desc_rng);
      }
      obs.descriptor.normalize();
    }
    out.push_back(obs);
  }
  return out;
}

}  // namespace sgslam
