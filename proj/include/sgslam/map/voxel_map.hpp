#pragma once

// Occupancy-histogram voxel map: each voxel carries a hit weight and a
// per-class
// label histogram. Integration backprojects valid fused pixels; accumulation
// is commutative so frame order cannot change the map.

#include <algorithm>
#include <map>
#include <unordered_map>
#include <vector>

#include "sgslam/core/geometry.hpp"
#include "sgslam/fusion/temporal.hpp"
#include "sgslam/io/ply.hpp"

namespace sgslam {

struct Voxel {
  float weight = 0.0f;
  std::map<uint16_t, uint32_t> histogram;  // ordered: argmax ties -> lowest id

  uint16_t argmax_label() const {
    uint16_t best = kInvalidLabel;
    uint32_t best_count = 0;
    for (const auto& [cls, count] : histogram) {
      if (count > best_count) {
        best = cls;
        best_count = count;
      }
    }
    return best;
  }
};

class VoxelMap {
 public:
  explicit VoxelMap(double voxel_size = 0.1) : voxel_size_(voxel_size) {
    if (voxel_size <= 0) {
      throw Error(ErrorCode::kDomainViolation, "VoxelMap: voxel size must be > 0");
    }
  }

  double voxel_size() const { return voxel_size_; }
  size_t size() const { return grid_.size(); }

  struct Key {
    int x = 0, y = 0, z = 0;
    bool operator<(const Key& o) const {
      if (x != o.x) return x < o.x;
      if (y != o.y) return y < o.y;
      return z < o.z;
    }
    bool operator==(const Key& o) const {
      return x == o.x && y == o.y && z == o.z;
    }
  };

  Key key_of(const Vec3& p) const {
    return Key{int(std::floor(p.x() / voxel_size_)),
               int(std::floor(p.y() / voxel_size_)),
               int(std::floor(p.z() / voxel_size_))};
  }

  Vec3 center_of(const Key& k) const {
    return Vec3((k.x + 0.5) * voxel_size_, (k.y + 0.5) * voxel_size_,
                (k.z + 0.5) * voxel_size_);
  }

  AABox box_of(const Key& k) const {
    return AABox(Vec3(k.x, k.y, k.z) * voxel_size_,
                 Vec3(k.x + 1, k.y + 1, k.z + 1) * voxel_size_);
  }

  const Voxel* find(const Key& k) const {
    auto it = grid_.find(pack(k));
    return it == grid_.end() ? nullptr : &it->second;
  }

  /// Backprojects every valid fused pixel into the world and accumulates a
  /// unit hit with the fused label vote.
  void integrate_frame(const FusedFrame& fused, const Pose& t_world_cam,
                       const CameraIntrinsics& k) {
    if (!fused.labels.same_shape(fused.depth.width, fused.depth.height)) {
      throw Error(ErrorCode::kDomainViolation, "integrate_frame: shape mismatch");
    }
    const Mat3 rot = t_world_cam.rotation_matrix();
    const Vec3 t = t_world_cam.translation;
    for (int y = 0; y < fused.depth.height; ++y) {
      for (int x = 0; x < fused.depth.width; ++x) {
        const float d = fused.depth.at(x, y);
        if (!depth_valid(d)) continue;
        const uint16_t label = fused.labels.at(x, y);
        if (label == kInvalidLabel) continue;
        const Vec3 p = rot * backproject(Vec2(x, y), double(d), k) + t;
        Voxel& v = grid_[pack(key_of(p))];
        v.weight += 1.0f;
        v.histogram[label] += 1;
      }
    }
  }

  /// Keys in deterministic (sorted) order.
  std::vector<Key> sorted_keys() const {
    std::vector<Key> keys;
    keys.reserve(grid_.size());
    for (const auto& [packed, voxel] : grid_) keys.push_back(unpack(packed));
    std::sort(keys.begin(), keys.end());
    return keys;
  }

  /// Voxel centers with argmax labels (deterministic order).
  LabeledCloud to_cloud() const {
    LabeledCloud cloud;
    for (const Key& k : sorted_keys()) {
      cloud.points.push_back(center_of(k));
      cloud.labels.push_back(find(k)->argmax_label());
    }
    return cloud;
  }

 private:
  static uint64_t pack(const Key& k) {
    auto enc = [](int v) { return uint64_t(uint32_t(v + (1 << 20))) & 0x1FFFFF; };
    return (enc(k.x) << 42) | (enc(k.y) << 21) | enc(k.z);
  }
  static Key unpack(uint64_t p) {
    auto dec = [](uint64_t v) { return int(v & 0x1FFFFF) - (1 << 20); };
    return Key{dec(p >> 42), dec(p >> 21), dec(p)};
  }

  double voxel_size_;
  std::unordered_map<uint64_t, Voxel> grid_;
};

// ---------------------------------------------------------------------------
// Object extraction and room assignment
// ---------------------------------------------------------------------------

struct ExtractedObject {
  std::string cls;
  uint16_t label = kInvalidLabel;
  Vec3 centroid = Vec3::Zero();  // weight-weighted voxel-center mean
  AABox box;                     // tight AABB over component voxels
  int voxel_count = 0;
  int room_id = -1;  // filled by assign_rooms; -1 = unassigned
};

/// 26-connected components of voxels sharing an argmax label restricted to
/// the given object classes; components below min_voxels are dropped.
inline std::vector<ExtractedObject> extract_objects(
    const VoxelMap& map, const std::vector<std::string>& label_set,
    const std::vector<uint16_t>& object_class_ids, int min_voxels = 5) {
  std::map<VoxelMap::Key, uint16_t> object_voxels;
  for (const VoxelMap::Key& k : map.sorted_keys()) {
    const uint16_t label = map.find(k)->argmax_label();
    for (uint16_t cls : object_class_ids) {
      if (label == cls) {
        object_voxels[k] = label;
        break;
      }
    }
  }

  std::vector<ExtractedObject> out;
  std::map<VoxelMap::Key, bool> visited;
  for (const auto& [seed, seed_label] : object_voxels) {
    if (visited[seed]) continue;
    std::vector<VoxelMap::Key> component;
    std::vector<VoxelMap::Key> stack{seed};
    visited[seed] = true;
    while (!stack.empty()) {
      const VoxelMap::Key k = stack.back();
      stack.pop_back();
      component.push_back(k);
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dz = -1; dz <= 1; ++dz) {
            if (!dx && !dy && !dz) continue;
            const VoxelMap::Key n{k.x + dx, k.y + dy, k.z + dz};
            auto it = object_voxels.find(n);
            if (it == object_voxels.end() || it->second != seed_label) continue;
            if (visited[n]) continue;
            visited[n] = true;
            stack.push_back(n);
          }
        }
      }
    }
    if (int(component.size()) < min_voxels) continue;
    ExtractedObject obj;
    obj.label = seed_label;
    obj.cls = seed_label < label_set.size() ? label_set[seed_label] : "?";
    obj.voxel_count = int(component.size());
    double weight_sum = 0.0;
    Vec3 centroid = Vec3::Zero();
    for (const VoxelMap::Key& k : component) {
      const double w = double(map.find(k)->weight);
      centroid += w * map.center_of(k);
      weight_sum += w;
      const AABox b = map.box_of(k);
      obj.box.expand(b.min);
      obj.box.expand(b.max);
    }
    obj.centroid = centroid / weight_sum;
    out.push_back(std::move(obj));
  }
  return out;
}

/// Assigns each object to the first room (spec order) whose footprint
/// contains its centroid; outside-all objects stay unassigned.
inline void assign_rooms(std::vector<ExtractedObject>& objects,
                         const std::vector<RoomSpec>& rooms) {
  for (auto& obj : objects) {
    obj.room_id = -1;
    for (const auto& r : rooms) {
      if (obj.centroid.x() >= r.min.x() && obj.centroid.x() <= r.max.x() &&
          obj.centroid.y() >= r.min.y() && obj.centroid.y() <= r.max.y()) {
        obj.room_id = r.id;
        break;
      }
    }
  }
}

}  // namespace sgslam
