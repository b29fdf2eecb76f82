#pragma once

// Scene-graph assembly from a voxel map: building root, rooms from the scene
// footprints, object nodes from extracted components, free-voxel place grid,
// and containment/adjacency/support/traversability edges. Mirrors the
// reference-graph conventions so graph metrics compare like with like.

#include <vector>

#include "sgslam/map/scene_graph.hpp"
#include "sgslam/map/voxel_map.hpp"
#include "sgslam/sim/simulator.hpp"

namespace sgslam {

struct MapGraphConfig {
  double place_spacing = 0.8;
  double place_margin = 0.35;
  double place_clearance = 0.25;   // horizontal keep-out around occupied voxels
  double place_z_lo = 0.25;        // occupied-z band that blocks a place
  double place_z_hi = 1.8;
  double support_z_tol = 0.12;     // quantized boxes need voxel-size slack
  double support_overlap_frac = 0.3;
  int min_voxels = 5;
};

/// Builds the hierarchical graph for a mapped run. Room footprints and
/// doorway adjacency come from the scene spec (room segmentation itself is
/// not estimated); objects and place occupancy come from the map.
inline SceneGraph build_scene_graph(const VoxelMap& map,
                                    const std::vector<ExtractedObject>& objects,
                                    const SceneSpec& spec,
                                    const MapGraphConfig& cfg = {}) {
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

  std::map<int, int> room_node;
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

  std::vector<int> object_node_ids;
  for (const auto& obj : objects) {
    SceneGraphNode n;
    n.id = next_id++;
    n.layer = GraphLayer::kObject;
    n.cls = obj.cls;
    n.centroid = obj.centroid;
    n.box = obj.box;
    g.nodes.push_back(n);
    object_node_ids.push_back(n.id);
    if (obj.room_id >= 0 && room_node.count(obj.room_id)) {
      g.edges.push_back({n.id, room_node.at(obj.room_id), Relation::kContains});
    }
  }

  for (size_t i = 0; i < objects.size(); ++i) {
    for (size_t j = 0; j < objects.size(); ++j) {
      if (i == j) continue;
      const AABox& top = objects[i].box;
      const AABox& bottom = objects[j].box;
      if (std::abs(top.min.z() - bottom.max.z()) > cfg.support_z_tol) continue;
      const double overlap = top.overlap_area_xy(bottom);
      const double top_area =
          (top.max.x() - top.min.x()) * (top.max.y() - top.min.y());
      if (top_area > 0 && overlap >= cfg.support_overlap_frac * top_area) {
        g.edges.push_back(
            {object_node_ids[i], object_node_ids[j], Relation::kSupports});
      }
    }
  }

  // Free-space places: the reference grid minus cells blocked by occupied
  // voxels in the standing-height band.
  auto blocked = [&](const Vec3& p, double floor_z) {
    const int r = int(std::ceil(cfg.place_clearance / map.voxel_size()));
    const VoxelMap::Key c = map.key_of(
        Vec3(p.x(), p.y(), floor_z + 0.5 * (cfg.place_z_lo + cfg.place_z_hi)));
    const int z_lo = int(std::floor((floor_z + cfg.place_z_lo) / map.voxel_size()));
    const int z_hi = int(std::floor((floor_z + cfg.place_z_hi) / map.voxel_size()));
    for (int dx = -r; dx <= r; ++dx) {
      for (int dy = -r; dy <= r; ++dy) {
        for (int z = z_lo; z <= z_hi; ++z) {
          const VoxelMap::Key k{c.x + dx, c.y + dy, z};
          const Voxel* v = map.find(k);
          if (!v) continue;
          const Vec3 vc = map.center_of(k);
          if (std::hypot(vc.x() - p.x(), vc.y() - p.y()) <= cfg.place_clearance) {
            return true;
          }
        }
      }
    }
    return false;
  };

  std::map<std::tuple<int, int, int>, int> place_at;
  std::vector<std::pair<int, Vec3>> places;
  for (const auto& r : spec.rooms) {
    const double x0 = r.min.x() + cfg.place_margin;
    const double y0 = r.min.y() + cfg.place_margin;
    const double x1 = r.max.x() - cfg.place_margin;
    const double y1 = r.max.y() - cfg.place_margin;
    const int nx = std::max(1, int(std::floor((x1 - x0) / cfg.place_spacing)) + 1);
    const int ny = std::max(1, int(std::floor((y1 - y0) / cfg.place_spacing)) + 1);
    for (int iy = 0; iy < ny; ++iy) {
      for (int ix = 0; ix < nx; ++ix) {
        const Vec3 p(x0 + ix * cfg.place_spacing, y0 + iy * cfg.place_spacing,
                     r.floor_z);
        if (p.x() > x1 + 1e-9 || p.y() > y1 + 1e-9) continue;
        if (blocked(p, r.floor_z)) continue;
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
    int best_a = -1, best_b = -1;
    double da = 1e18, db = 1e18;
    for (const auto& [id, p] : places) {
      const int room = g.contains_parent(id);
      const double dist = (p - d.center).norm();
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

/// Dense labeled surface samples of the true world (interior-facing faces on
/// a fixed grid); the ground-truth counterpart for reconstruction and
/// label-transfer metrics.
inline LabeledCloud sample_surface_cloud(const World& world,
                                         const SceneSpec& spec,
                                         double spacing = 0.1) {
  LabeledCloud cloud;
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
  for (const auto& wb : world.boxes) {
    for (int axis = 0; axis < 3; ++axis) {
      for (int side = 0; side < 2; ++side) {
        if (!faces_into_room(wb.box, axis, side)) continue;
        const int u_axis = (axis + 1) % 3;
        const int v_axis = (axis + 2) % 3;
        const double u0 = wb.box.min[u_axis], u1 = wb.box.max[u_axis];
        const double v0 = wb.box.min[v_axis], v1 = wb.box.max[v_axis];
        for (double u = u0 + 0.5 * spacing; u < u1; u += spacing) {
          for (double v = v0 + 0.5 * spacing; v < v1; v += spacing) {
            Vec3 p;
            p[axis] = side ? wb.box.max[axis] : wb.box.min[axis];
            p[u_axis] = u;
            p[v_axis] = v;
            cloud.points.push_back(p);
            cloud.labels.push_back(wb.label);
          }
        }
      }
    }
  }
  return cloud;
}

}  // namespace sgslam
