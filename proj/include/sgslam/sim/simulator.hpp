#pragma once

// Frame-packet stream assembly and the reference scene graph. The simulator
// stands in for the learned perception stack: oracle depth/label maps,
// keypoint tracks with descriptors, IMU windows, and held-out ground truth.

#include <memory>
#include <vector>

#include "sgslam/io/trajectory_csv.hpp"
#include "sgslam/map/scene_graph.hpp"
#include "sgslam/sim/imu.hpp"
#include "sgslam/sim/keypoints.hpp"
#include "sgslam/sim/render.hpp"
#include "sgslam/sim/trajectory.hpp"

namespace sgslam {

struct FramePacket {
  double timestamp = 0.0;
  DepthMap depth;
  LabelMap labels;
  std::vector<KeypointObs> keypoints;
  std::vector<ImuSample> imu_window;  // spans (previous frame, this frame]
  Pose gt_pose;                       // T_WB; held out from estimators
};

struct SimConfig {
  CameraIntrinsics intrinsics{120.0, 120.0, 79.5, 59.5, 160, 120};
  double frame_rate = 20.0;  // Hz
  double imu_rate = 200.0;   // Hz, must be an integer multiple of frame_rate
  double duration = 10.0;    // s
  double max_range = 30.0;   // rendering range (m)
  int n_static_landmarks = 900;
  int n_agent_landmarks = 12;
  TrajectoryParams trajectory;
};

/// Fixed body-to-camera extrinsics: camera looks along body +x, image x to
/// the body's right (-y), image y down (-z).
inline Pose body_to_camera() {
  Mat3 r_bc;
  // Columns are the camera axes expressed in body coordinates.
  r_bc.col(0) = Vec3(0, -1, 0);
  r_bc.col(1) = Vec3(0, 0, -1);
  r_bc.col(2) = Vec3(1, 0, 0);
  return Pose(r_bc, Vec3::Zero(), "cam", "body");
}

struct SimStream {
  SceneSpec scene;
  NoiseSpec noise;
  SimConfig config;
  std::vector<FramePacket> packets;
  Trajectory gt_trajectory;  // body poses at frame timestamps
  Vec3 initial_velocity = Vec3::Zero();
  SceneGraph reference_graph;
};

struct ReferenceGraphConfig {
  double place_spacing = 0.8;
  double place_margin = 0.35;       // keep-out from room walls
  double place_object_margin = 0.25;  // keep-out around object footprints
  double support_z_tol = 0.05;
  double support_overlap_frac = 0.5;
};

/// Builds the scene graph implied by the spec: building root, rooms, objects,
/// free-space grid places, containment/adjacency/support/traversability.
inline SceneGraph reference_scene_graph(const SceneSpec& spec,
                                        const ReferenceGraphConfig& cfg = {}) {
  const World world = build_world(spec);
  SceneGraph g;
  int next_id = 0;

  SceneGraphNode building;
  building.id = next_id++;
  building.layer = GraphLayer::kBuilding;
  building.cls = "building";
  AABox bbox;
  for (const auto& r : spec.rooms) {
    bbox.expand(Vec3(r.min.x(), r.min.y(), r.floor_z));
    bbox.expand(Vec3(r.max.x(), r.max.y(), r.floor_z + r.height));
  }
  building.box = bbox;
  building.centroid = bbox.center();
  g.nodes.push_back(building);

  std::map<int, int> room_node;  // room id -> node id
  for (const auto& r : spec.rooms) {
    SceneGraphNode n;
    n.id = next_id++;
    n.layer = GraphLayer::kRoom;
    n.cls = "room";
    n.box = r.footprint_box();
    n.centroid = n.box.center();
    g.nodes.push_back(n);
    room_node[r.id] = n.id;
    g.edges.push_back({n.id, building.id, Relation::kContains});
  }

  std::vector<int> object_node;
  for (const auto& o : spec.objects) {
    SceneGraphNode n;
    n.id = next_id++;
    n.layer = GraphLayer::kObject;
    n.cls = o.cls;
    n.box = o.box;
    n.centroid = o.box.center();
    g.nodes.push_back(n);
    object_node.push_back(n.id);
    g.edges.push_back({n.id, room_node.at(o.room_id), Relation::kContains});
  }

  // Object-on-object support: the upper box rests on the lower one.
  for (size_t i = 0; i < spec.objects.size(); ++i) {
    for (size_t j = 0; j < spec.objects.size(); ++j) {
      if (i == j) continue;
      const AABox& top = spec.objects[i].box;
      const AABox& bottom = spec.objects[j].box;
      if (std::abs(top.min.z() - bottom.max.z()) > cfg.support_z_tol) continue;
      const double overlap = top.overlap_area_xy(bottom);
      const double top_area =
          (top.max.x() - top.min.x()) * (top.max.y() - top.min.y());
      if (top_area > 0 && overlap >= cfg.support_overlap_frac * top_area) {
        g.edges.push_back({object_node[i], object_node[j], Relation::kSupports});
      }
    }
  }

  // Free-space place grid per room, with traversable edges between grid
  // neighbors and one edge through each doorway.
  std::map<std::tuple<int, int, int>, int> place_at;  // (room, ix, iy) -> id
  std::vector<std::pair<int, Vec3>> places;
  for (const auto& r : spec.rooms) {
    const double place_z = r.floor_z;
    const double x0 = r.min.x() + cfg.place_margin;
    const double y0 = r.min.y() + cfg.place_margin;
    const double x1 = r.max.x() - cfg.place_margin;
    const double y1 = r.max.y() - cfg.place_margin;
    const int nx = std::max(1, int(std::floor((x1 - x0) / cfg.place_spacing)) + 1);
    const int ny = std::max(1, int(std::floor((y1 - y0) / cfg.place_spacing)) + 1);
    for (int iy = 0; iy < ny; ++iy) {
      for (int ix = 0; ix < nx; ++ix) {
        const Vec3 p(x0 + ix * cfg.place_spacing,
                     y0 + iy * cfg.place_spacing, place_z);
        if (p.x() > x1 + 1e-9 || p.y() > y1 + 1e-9) continue;
        bool blocked = false;
        for (const auto& o : spec.objects) {
          if (p.x() > o.box.min.x() - cfg.place_object_margin &&
              p.x() < o.box.max.x() + cfg.place_object_margin &&
              p.y() > o.box.min.y() - cfg.place_object_margin &&
              p.y() < o.box.max.y() + cfg.place_object_margin) {
            blocked = true;
            break;
          }
        }
        if (blocked) continue;
        SceneGraphNode n;
        n.id = next_id++;
        n.layer = GraphLayer::kPlace;
        n.cls = "place";
        n.centroid = p;
        n.box = AABox(p - Vec3(0.1, 0.1, 0.0), p + Vec3(0.1, 0.1, 0.2));
        g.nodes.push_back(n);
        g.edges.push_back({n.id, room_node.at(r.id), Relation::kContains});
        place_at[{r.id, ix, iy}] = n.id;
        places.emplace_back(n.id, p);
        if (ix > 0) {
          auto it = place_at.find({r.id, ix - 1, iy});
          if (it != place_at.end()) {
            g.edges.push_back({it->second, n.id, Relation::kTraversable});
          }
        }
        if (iy > 0) {
          auto it = place_at.find({r.id, ix, iy - 1});
          if (it != place_at.end()) {
            g.edges.push_back({it->second, n.id, Relation::kTraversable});
          }
        }
      }
    }
  }

  for (const auto& d : world.doorways) {
    g.edges.push_back(
        {room_node.at(d.room_a), room_node.at(d.room_b), Relation::kAdjacent});
    // Connect nearest places on both sides of the doorway.
    int best_a = -1, best_b = -1;
    double da = 1e18, db = 1e18;
    for (const auto& [id, p] : places) {
      const SceneGraphNode* n = g.node_by_id(id);
      const int room = g.contains_parent(id);
      const double dist = (p - d.center).norm();
      (void)n;
      if (room == room_node.at(d.room_a) && dist < da) {
        da = dist;
        best_a = id;
      }
      if (room == room_node.at(d.room_b) && dist < db) {
        db = dist;
        best_b = id;
      }
    }
    if (best_a >= 0 && best_b >= 0) {
      g.edges.push_back({best_a, best_b, Relation::kTraversable});
    }
  }
  return g;
}

/// Deterministic end-to-end stream generation: trajectory at the IMU rate,
/// frames at every imu/frame ratio step, per-frame rendered maps, keypoints,
/// and the IMU window covering (previous frame, this frame].
inline SimStream simulate(const SceneSpec& scene, const NoiseSpec& noise,
                          const SimConfig& cfg) {
  scene.validate();
  noise.validate();
  const double ratio = cfg.imu_rate / cfg.frame_rate;
  const int step = int(std::llround(ratio));
  if (std::abs(ratio - step) > 1e-9 || step < 1) {
    throw Error(ErrorCode::kDomainViolation,
                "imu_rate must be an integer multiple of frame_rate");
  }

  SimStream stream;
  stream.noise = noise;
  stream.config = cfg;

  // The emitted trajectory starts at the world origin; express the scene in
  // the same frame so every downstream consumer shares one coordinate system.
  const Vec2 start = trajectory_start_point(scene, cfg.trajectory);
  const SceneSpec shifted = translate_scene(
      scene, Vec3(-start.x(), -start.y(),
                  -(scene.rooms.front().floor_z + cfg.trajectory.height)));
  stream.scene = shifted;

  const World world = build_world(shifted);
  const auto traj =
      generate_trajectory(scene, cfg.trajectory, cfg.duration, cfg.imu_rate);
  const auto imu = synthesize_imu(traj, noise);
  const auto landmarks = sample_landmarks(world, shifted, cfg.n_static_landmarks,
                                          cfg.n_agent_landmarks, noise.seed);
  const Pose t_bc = body_to_camera();

  stream.initial_velocity = traj.front().velocity;

  const int n_frames = int((traj.size() - 1) / step) + 1;
  for (int f = 0; f < n_frames; ++f) {
    const int s = f * step;
    const TrajectorySample& ts = traj[s];
    FramePacket pkt;
    pkt.timestamp = ts.t;
    pkt.gt_pose = ts.pose;
    const Pose t_wc = ts.pose * t_bc;

    RenderResult rendered = render_perception(world, shifted, ts.t, t_wc,
                                              cfg.intrinsics, noise, uint64_t(f),
                                              cfg.max_range);
    pkt.depth = std::move(rendered.depth);
    pkt.labels = std::move(rendered.labels);
    pkt.keypoints = observe_keypoints(world, shifted, landmarks, ts.t, t_wc,
                                      cfg.intrinsics, noise, uint64_t(f));
    if (f > 0) {
      for (int i = (f - 1) * step + 1; i <= s; ++i) {
        pkt.imu_window.push_back(imu[i]);
      }
    } else {
      pkt.imu_window.push_back(imu[0]);  // seeds gap-free integration
    }
    stream.packets.push_back(std::move(pkt));
    stream.gt_trajectory.push_back({ts.t, ts.pose});
  }
  stream.reference_graph = reference_scene_graph(shifted);
  return stream;
}

}  // namespace sgslam
