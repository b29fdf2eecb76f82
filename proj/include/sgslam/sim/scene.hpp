#pragma once

// Synthetic indoor world: axis-aligned rooms with shared-wall doorways,
// labeled boxes for floors/ceilings/walls/objects, and waypoint-driven
// dynamic agents. Geometry is boxes only so ray intersections stay exact.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sgslam/core/aabox.hpp"
#include "sgslam/core/types.hpp"
#include "sgslam/io/config.hpp"

namespace sgslam {

struct RoomSpec {
  int id = 0;
  Vec2 min = Vec2::Zero();
  Vec2 max = Vec2::Zero();
  double height = 2.5;
  double floor_z = 0.0;

  AABox footprint_box() const {
    return AABox(Vec3(min.x(), min.y(), floor_z),
                 Vec3(max.x(), max.y(), floor_z + height));
  }
};

struct ObjectSpec {
  std::string cls;
  AABox box;
  int room_id = -1;
};

struct AgentSpec {
  std::string cls = "person";
  std::vector<Vec2> waypoints;  // cyclic path at fixed height
  double speed = 0.8;           // m/s
  Vec3 size = Vec3(0.5, 0.5, 1.7);
};

struct NoiseSpec {
  double depth_sigma0 = 0.0;      // m
  double depth_sigma1 = 0.0;      // m per m of depth
  double label_flip_prob = 0.0;
  double flicker_amplitude = 0.0;  // m, per-frame uniform offset
  double gyro_noise = 0.0;         // rad/s/sqrt(Hz)
  double accel_noise = 0.0;        // m/s^2/sqrt(Hz)
  double gyro_bias_walk = 0.0;     // rad/s^2/sqrt(Hz)
  double accel_bias_walk = 0.0;    // m/s^3/sqrt(Hz)
  double descriptor_noise = 0.0;
  double pixel_noise = 0.0;        // px
  uint64_t seed = 1;

  void validate() const {
    const double vals[] = {depth_sigma0,  depth_sigma1,    label_flip_prob,
                           flicker_amplitude, gyro_noise,  accel_noise,
                           gyro_bias_walk, accel_bias_walk, descriptor_noise,
                           pixel_noise};
    for (double v : vals) {
      if (v < 0.0 || !std::isfinite(v)) {
        throw Error(ErrorCode::kSceneInvalid, "NoiseSpec: negative entry");
      }
    }
  }
};

struct SceneSpec {
  std::vector<RoomSpec> rooms;
  std::vector<ObjectSpec> objects;
  std::vector<AgentSpec> agents;
  std::vector<std::string> label_set;       // dense class ids from 0
  std::set<std::string> dynamic_classes{"person"};
  double wall_thickness = 0.1;
  double door_width = 0.9;
  double door_height = 2.0;

  int label_id(const std::string& name) const {
    for (size_t i = 0; i < label_set.size(); ++i) {
      if (label_set[i] == name) return int(i);
    }
    throw Error(ErrorCode::kSceneInvalid, "unknown class label: " + name);
  }

  bool is_dynamic_label(uint16_t id) const {
    return id < label_set.size() && dynamic_classes.count(label_set[id]) > 0;
  }

  /// Label ids of the dynamic classes that actually exist in the label set.
  std::vector<uint16_t> dynamic_label_ids() const {
    std::vector<uint16_t> out;
    for (size_t i = 0; i < label_set.size(); ++i) {
      if (dynamic_classes.count(label_set[i])) out.push_back(uint16_t(i));
    }
    return out;
  }

  bool is_structural_label(uint16_t id) const {
    if (id >= label_set.size()) return true;
    const std::string& s = label_set[id];
    return s == "wall" || s == "floor" || s == "ceiling";
  }

  const RoomSpec* room_by_id(int id) const {
    for (const auto& r : rooms) {
      if (r.id == id) return &r;
    }
    return nullptr;
  }

  void finalize_labels() {
    if (!label_set.empty()) return;
    label_set = {"wall", "floor", "ceiling"};
    std::set<std::string> extra;
    for (const auto& o : objects) extra.insert(o.cls);
    for (const auto& a : agents) extra.insert(a.cls);
    for (const auto& c : extra) {
      if (std::find(label_set.begin(), label_set.end(), c) == label_set.end()) {
        label_set.push_back(c);
      }
    }
  }

  void validate() const {
    if (rooms.empty()) {
      throw Error(ErrorCode::kSceneInvalid, "scene needs at least one room");
    }
    std::set<int> ids;
    for (const auto& r : rooms) {
      if (!(r.max.x() > r.min.x()) || !(r.max.y() > r.min.y()) || r.height <= 0) {
        throw Error(ErrorCode::kSceneInvalid, "room with empty footprint");
      }
      if (!ids.insert(r.id).second) {
        throw Error(ErrorCode::kSceneInvalid, "duplicate room id");
      }
    }
    for (size_t i = 0; i < rooms.size(); ++i) {
      for (size_t j = i + 1; j < rooms.size(); ++j) {
        const double w = std::min(rooms[i].max.x(), rooms[j].max.x()) -
                         std::max(rooms[i].min.x(), rooms[j].min.x());
        const double h = std::min(rooms[i].max.y(), rooms[j].max.y()) -
                         std::max(rooms[i].min.y(), rooms[j].min.y());
        if (w > 1e-9 && h > 1e-9) {
          throw Error(ErrorCode::kSceneInvalid, "room footprints overlap");
        }
      }
    }
    for (const auto& o : objects) {
      const RoomSpec* room = room_by_id(o.room_id);
      if (!room) {
        throw Error(ErrorCode::kSceneInvalid,
                    "object '" + o.cls + "' references unknown room");
      }
      if (o.box.min.x() < room->min.x() - 1e-9 ||
          o.box.max.x() > room->max.x() + 1e-9 ||
          o.box.min.y() < room->min.y() - 1e-9 ||
          o.box.max.y() > room->max.y() + 1e-9) {
        throw Error(ErrorCode::kSceneInvalid,
                    "object '" + o.cls + "' leaves its room footprint");
      }
    }
    for (const auto& a : agents) {
      if (a.waypoints.size() < 2 || a.speed <= 0) {
        throw Error(ErrorCode::kSceneInvalid,
                    "agent needs >= 2 waypoints and positive speed");
      }
    }
    for (const auto& c : dynamic_classes) {
      bool used = false;
      for (const auto& a : agents) used |= (a.cls == c);
      (void)used;  // dynamic classes may exist without an agent in the scene
    }
  }
};

// ---------------------------------------------------------------------------
// Solid world geometry
// ---------------------------------------------------------------------------

struct WorldBox {
  AABox box;
  uint16_t label = 0;
  int object_index = -1;  // index into SceneSpec::objects for object boxes
};

struct Doorway {
  int room_a = 0, room_b = 0;
  Vec3 center = Vec3::Zero();
};

struct World {
  std::vector<WorldBox> boxes;  // static solids
  std::vector<Doorway> doorways;
  double max_room_height = 0.0;
};

namespace sim_detail {

struct BoundaryEdge {
  int axis;      // 0: wall plane x = c (runs along y), 1: plane y = c
  double coord;  // plane position
  double lo, hi; // run interval on the other axis
  int room_id;
  double floor_z;
  double height;
};

inline int64_t quantize(double v) { return int64_t(std::llround(v * 1e6)); }

}  // namespace sim_detail

inline World build_world(const SceneSpec& spec) {
  using sim_detail::BoundaryEdge;
  World world;
  const uint16_t wall_label = uint16_t(spec.label_id("wall"));
  const uint16_t floor_label = uint16_t(spec.label_id("floor"));
  const uint16_t ceiling_label = uint16_t(spec.label_id("ceiling"));

  // Floor and ceiling slabs per room.
  for (const auto& r : spec.rooms) {
    world.max_room_height = std::max(world.max_room_height, r.height);
    world.boxes.push_back({AABox(Vec3(r.min.x(), r.min.y(), r.floor_z - 0.2),
                                 Vec3(r.max.x(), r.max.y(), r.floor_z)),
                           floor_label});
    world.boxes.push_back(
        {AABox(Vec3(r.min.x(), r.min.y(), r.floor_z + r.height),
               Vec3(r.max.x(), r.max.y(), r.floor_z + r.height + 0.2)),
         ceiling_label});
  }

  // Gather room boundary edges grouped by wall plane.
  std::map<std::pair<int, int64_t>, std::vector<BoundaryEdge>> planes;
  for (const auto& r : spec.rooms) {
    auto add = [&](int axis, double coord, double lo, double hi) {
      planes[{axis, sim_detail::quantize(coord)}].push_back(
          BoundaryEdge{axis, coord, lo, hi, r.id, r.floor_z, r.height});
    };
    add(0, r.min.x(), r.min.y(), r.max.y());
    add(0, r.max.x(), r.min.y(), r.max.y());
    add(1, r.min.y(), r.min.x(), r.max.x());
    add(1, r.max.y(), r.min.x(), r.max.x());
  }

  const double half_t = 0.5 * spec.wall_thickness;
  auto emit_wall = [&](int axis, double coord, double lo, double hi, double z0,
                       double z1) {
    if (hi - lo < 1e-9 || z1 - z0 < 1e-9) return;
    AABox b;
    if (axis == 0) {
      b = AABox(Vec3(coord - half_t, lo, z0), Vec3(coord + half_t, hi, z1));
    } else {
      b = AABox(Vec3(lo, coord - half_t, z0), Vec3(hi, coord + half_t, z1));
    }
    world.boxes.push_back({b, wall_label});
  };

  for (auto& [key, edges] : planes) {
    const int axis = key.first;
    const double coord = edges.front().coord;
    // Sweep elementary intervals to find shared (two-room) runs.
    std::vector<double> cuts;
    for (const auto& e : edges) {
      cuts.push_back(e.lo);
      cuts.push_back(e.hi);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-9; }),
               cuts.end());
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double lo = cuts[i], hi = cuts[i + 1];
      const double mid = 0.5 * (lo + hi);
      std::vector<const BoundaryEdge*> cover;
      for (const auto& e : edges) {
        if (mid > e.lo - 1e-9 && mid < e.hi + 1e-9) cover.push_back(&e);
      }
      if (cover.empty()) continue;
      double z0 = cover.front()->floor_z;
      double z1 = z0;
      for (const auto* e : cover) {
        z0 = std::min(z0, e->floor_z);
        z1 = std::max(z1, e->floor_z + e->height);
      }
      if (cover.size() == 1) {
        emit_wall(axis, coord, lo, hi, z0, z1);
        continue;
      }
      // Shared run between two rooms: carve a centered doorway when the run
      // is long enough, otherwise keep it solid.
      if (hi - lo >= spec.door_width + 0.3) {
        const double door_lo = mid - 0.5 * spec.door_width;
        const double door_hi = mid + 0.5 * spec.door_width;
        emit_wall(axis, coord, lo, door_lo, z0, z1);
        emit_wall(axis, coord, door_hi, hi, z0, z1);
        emit_wall(axis, coord, door_lo, door_hi, z0 + spec.door_height, z1);
        Doorway d;
        d.room_a = std::min(cover[0]->room_id, cover[1]->room_id);
        d.room_b = std::max(cover[0]->room_id, cover[1]->room_id);
        d.center = axis == 0 ? Vec3(coord, mid, z0) : Vec3(mid, coord, z0);
        world.doorways.push_back(d);
      } else {
        emit_wall(axis, coord, lo, hi, z0, z1);
      }
    }
  }

  for (size_t i = 0; i < spec.objects.size(); ++i) {
    world.boxes.push_back({spec.objects[i].box,
                           uint16_t(spec.label_id(spec.objects[i].cls)),
                           int(i)});
  }
  return world;
}

/// Axis-aligned box of an agent with its center at `pos`, feet at floor_z.
inline AABox agent_box(const AgentSpec& agent, const Vec2& pos,
                       double floor_z = 0.0) {
  return AABox(Vec3(pos.x() - 0.5 * agent.size.x(),
                    pos.y() - 0.5 * agent.size.y(), floor_z),
               Vec3(pos.x() + 0.5 * agent.size.x(),
                    pos.y() + 0.5 * agent.size.y(), floor_z + agent.size.z()));
}

/// Agent position at time t: constant speed along the cyclic waypoint path.
inline Vec2 agent_position(const AgentSpec& agent, double t) {
  std::vector<double> seg_len;
  double total = 0.0;
  const size_t n = agent.waypoints.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2 d = agent.waypoints[(i + 1) % n] - agent.waypoints[i];
    seg_len.push_back(d.norm());
    total += seg_len.back();
  }
  if (total < 1e-9) return agent.waypoints.front();
  double s = std::fmod(agent.speed * t, total);
  if (s < 0) s += total;
  for (size_t i = 0; i < n; ++i) {
    if (s <= seg_len[i] || i + 1 == n) {
      const double u = seg_len[i] < 1e-12 ? 0.0 : std::min(1.0, s / seg_len[i]);
      return agent.waypoints[i] +
             u * (agent.waypoints[(i + 1) % n] - agent.waypoints[i]);
    }
    s -= seg_len[i];
  }
  return agent.waypoints.front();
}

// ---------------------------------------------------------------------------
// Scene parsing from a config tree
// ---------------------------------------------------------------------------

inline SceneSpec parse_scene(const ConfigTable& cfg) {
  SceneSpec spec;
  for (const ConfigTable* rt : cfg.table_array("scene.rooms")) {
    RoomSpec r;
    r.id = int(rt->get_int("id", int64_t(spec.rooms.size())));
    auto mn = rt->find("min"), mx = rt->find("max");
    if (!mn || !mx) {
      throw Error(ErrorCode::kSceneInvalid, "room needs min/max");
    }
    auto mnv = mn->as_double_array(), mxv = mx->as_double_array();
    r.min = Vec2(mnv.at(0), mnv.at(1));
    r.max = Vec2(mxv.at(0), mxv.at(1));
    r.height = rt->get_double("height", 2.5);
    spec.rooms.push_back(r);
  }
  for (const ConfigTable* ot : cfg.table_array("scene.objects")) {
    ObjectSpec o;
    o.cls = ot->get_string("class", "object");
    o.room_id = int(ot->get_int("room", 0));
    auto mn = ot->find("min"), mx = ot->find("max");
    if (!mn || !mx) {
      throw Error(ErrorCode::kSceneInvalid, "object needs min/max");
    }
    auto mnv = mn->as_double_array(), mxv = mx->as_double_array();
    o.box = AABox(Vec3(mnv.at(0), mnv.at(1), mnv.at(2)),
                  Vec3(mxv.at(0), mxv.at(1), mxv.at(2)));
    spec.objects.push_back(o);
  }
  for (const ConfigTable* at : cfg.table_array("scene.agents")) {
    AgentSpec a;
    a.cls = at->get_string("class", "person");
    a.speed = at->get_double("speed", 0.8);
    const ConfigValue* wp = at->find("waypoints");
    if (!wp) {
      throw Error(ErrorCode::kSceneInvalid, "agent needs waypoints");
    }
    for (const auto& p : wp->as_array()) {
      auto v = p.as_double_array();
      a.waypoints.emplace_back(v.at(0), v.at(1));
    }
    spec.agents.push_back(a);
  }
  if (const ConfigValue* labels = cfg.find("scene.label_set")) {
    for (const auto& l : labels->as_array()) spec.label_set.push_back(l.as_string());
  }
  if (const ConfigValue* dyn = cfg.find("scene.dynamic_classes")) {
    spec.dynamic_classes.clear();
    for (const auto& l : dyn->as_array()) spec.dynamic_classes.insert(l.as_string());
  }
  spec.wall_thickness = cfg.get_double("scene.wall_thickness", 0.1);
  spec.door_width = cfg.get_double("scene.door_width", 0.9);
  spec.door_height = cfg.get_double("scene.door_height", 2.0);
  spec.finalize_labels();
  spec.validate();
  return spec;
}

inline NoiseSpec parse_noise(const ConfigTable& cfg) {
  NoiseSpec n;
  n.depth_sigma0 = cfg.get_double("noise.depth_sigma0", 0.0);
  n.depth_sigma1 = cfg.get_double("noise.depth_sigma1", 0.0);
  n.label_flip_prob = cfg.get_double("noise.label_flip_prob", 0.0);
  n.flicker_amplitude = cfg.get_double("noise.flicker_amplitude", 0.0);
  n.gyro_noise = cfg.get_double("noise.gyro_noise", 0.0);
  n.accel_noise = cfg.get_double("noise.accel_noise", 0.0);
  n.gyro_bias_walk = cfg.get_double("noise.gyro_bias_walk", 0.0);
  n.accel_bias_walk = cfg.get_double("noise.accel_bias_walk", 0.0);
  n.descriptor_noise = cfg.get_double("noise.descriptor_noise", 0.0);
  n.pixel_noise = cfg.get_double("noise.pixel_noise", 0.0);
  n.seed = uint64_t(cfg.get_int("noise.seed", cfg.get_int("run.seed", 1)));
  n.validate();
  return n;
}

}  // namespace sgslam
