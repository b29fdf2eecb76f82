#pragma once

// Per-frame VIO orchestration: descriptor matching into tracks, landmark
// admission (two-view triangulation, depth seeding when parallax is poor),
// semantic weighting, depth-candidate gating, and the square-root filter
// update. The depth/label maps are supplied by the caller so temporally
// fused maps can be swapped in transparently.

#include <map>
#include <vector>

#include "sgslam/sim/simulator.hpp"
#include "sgslam/vio/frontend.hpp"
#include "sgslam/vio/sqrt_filter.hpp"

namespace sgslam {

struct VioConfig {
  FilterConfig filter;
  bool semantic_mask = true;
};

class VioPipeline {
 public:
  VioPipeline(const VioConfig& cfg, const CameraIntrinsics& intrinsics,
              const Pose& t_bc, const Vec3& initial_velocity,
              std::vector<uint16_t> dynamic_label_ids)
      : cfg_(cfg),
        filter_(cfg.filter, intrinsics, t_bc, initial_velocity),
        dynamic_ids_(std::move(dynamic_label_ids)) {}

  const SqrtFilter& filter() const { return filter_; }
  const Trajectory& trajectory() const { return trajectory_; }
  const std::vector<OdometrySample>& odometry() const { return odometry_; }

  /// Phase 1: IMU propagation (or frame-0 initialization). Returns the
  /// predicted world camera pose, the reference for temporal warping.
  Pose predict(const FramePacket& pkt) {
    if (frame_ == 0) {
      filter_.initialize(pkt.timestamp, pkt.imu_window);
    } else {
      filter_.propagate(pkt.timestamp, pkt.imu_window);
    }
    predicted_ = true;
    return filter_.world_camera_pose();
  }

  /// Processes one packet against the given (possibly fused) maps.
  OdometrySample process(const FramePacket& pkt, const DepthMap& depth,
                         const LabelMap& labels) {
    if (!predicted_) predict(pkt);
    predicted_ = false;

    // Track continuation via descriptor matching.
    std::vector<int64_t> curr_track(pkt.keypoints.size(), -1);
    auto matches = match_frames(prev_keypoints_, pkt.keypoints,
                                cfg_.filter.gates.ratio_threshold);
    for (const auto& m : matches) {
      curr_track[size_t(m.curr_index)] = prev_track_ids_[size_t(m.prev_index)];
    }
    for (size_t i = 0; i < curr_track.size(); ++i) {
      if (curr_track[i] < 0) curr_track[i] = next_track_id_++;
    }

    // Record observations with semantic weight and depth sample.
    std::vector<int64_t> seen;
    for (size_t i = 0; i < pkt.keypoints.size(); ++i) {
      const Vec2& px = pkt.keypoints[i].pixel;
      const int xi = int(std::lround(px.x()));
      const int yi = int(std::lround(px.y()));
      if (!labels.in_bounds(xi, yi)) continue;
      TrackObservation obs;
      obs.frame = frame_;
      obs.pixel = px;
      obs.semantic_weight =
          cfg_.semantic_mask ? semantic_weight(px, labels, dynamic_ids_) : 1;
      obs.depth_sample =
          depth_valid(depth.at(xi, yi)) ? double(depth.at(xi, yi)) : -1.0;
      Track& track = tracks_[curr_track[i]];
      track.id = curr_track[i];
      track.observations.push_back(obs);
      track.misses = 0;
      seen.push_back(track.id);
    }
    for (auto& [id, track] : tracks_) {
      bool observed = false;
      for (int64_t s : seen) observed |= (s == id);
      if (!observed) ++track.misses;
    }

    admit_landmarks();

    // Whitened measurement stack for this frame.
    std::vector<VisualObservation> vis;
    std::vector<TrackedKeypoint> tracked;
    for (const auto& [id, track] : tracks_) {
      const TrackObservation* obs = track.observation_in(frame_);
      if (!obs) continue;
      if (!filter_.has_landmark(id)) continue;
      if (pending_rows_.count(id)) continue;  // already stacked at admission
      vis.push_back({id, frame_, obs->pixel, double(obs->semantic_weight)});
      TrackedKeypoint kp;
      kp.track_id = id;
      kp.pixel = obs->pixel;
      kp.semantic_weight = obs->semantic_weight;
      kp.has_landmark = true;
      auto res = filter_.reprojection_residual(id, obs->pixel);
      kp.reprojection_residual = res ? *res : 1e9;
      tracked.push_back(kp);
    }
    for (const auto& [id, rows] : pending_rows_) {
      for (const auto& o : rows) vis.push_back(o);
      const TrackObservation* obs = tracks_[id].observation_in(frame_);
      if (obs) {
        TrackedKeypoint kp;
        kp.track_id = id;
        kp.pixel = obs->pixel;
        kp.semantic_weight = obs->semantic_weight;
        kp.has_landmark = true;
        auto res = filter_.reprojection_residual(id, obs->pixel);
        kp.reprojection_residual = res ? *res : 1e9;
        tracked.push_back(kp);
      }
    }
    pending_rows_.clear();

    std::vector<DepthCandidate> factors;
    if (cfg_.filter.enable_depth_factors && frame_ > 0) {
      Vec3 mean_gyro = Vec3::Zero();
      for (const auto& s : pkt.imu_window) {
        mean_gyro += s.gyro - filter_.state().nav.bg;
      }
      if (!pkt.imu_window.empty()) mean_gyro /= double(pkt.imu_window.size());
      factors = select_depth_candidates(tracked, depth, mean_gyro.norm(),
                                        cfg_.filter.gates);
    }

    auto stack = filter_.stack_residuals(vis, factors);
    filter_.update(stack);

    OdometrySample odom = filter_.emit_odometry();
    odometry_.push_back(odom);
    trajectory_.push_back({odom.timestamp, odom.pose});

    // Drop stale tracks and marginalize their landmarks with the clones.
    std::vector<int64_t> dead;
    for (auto it = tracks_.begin(); it != tracks_.end();) {
      if (it->second.misses > cfg_.filter.max_track_gap) {
        if (filter_.has_landmark(it->first)) dead.push_back(it->first);
        it = tracks_.erase(it);
      } else {
        ++it;
      }
    }
    filter_.marginalize(dead);

    prev_keypoints_ = pkt.keypoints;
    prev_track_ids_ = curr_track;
    ++frame_;
    return odom;
  }

 private:
  struct Ray {
    Vec3 origin;
    Vec3 dir;
  };

  Ray observation_ray(const Pose& t_rc, const Vec2& px) const {
    Ray r;
    r.origin = t_rc.translation;
    r.dir = (t_rc.rotation_matrix() * pixel_ray(px, filter_.intrinsics()))
                .normalized();
    return r;
  }

  /// Midpoint two-view triangulation; empty when near-parallel.
  std::optional<Vec3> triangulate(const Ray& a, const Ray& b) const {
    const Vec3 w = b.origin - a.origin;
    const double d11 = 1.0, d22 = 1.0;
    const double d12 = a.dir.dot(b.dir);
    const double det = d11 * d22 - d12 * d12;
    if (det < 1e-9) return std::nullopt;
    const double r1 = a.dir.dot(w), r2 = b.dir.dot(w);
    const double s = (r1 * d22 - r2 * d12) / det;
    const double t = (r1 * d12 - r2 * d11) / det;
    return 0.5 * (a.origin + s * a.dir + b.origin + t * b.dir);
  }

  void admit_landmarks() {
    struct Candidate {
      int64_t id;
      int count;
      int first_frame;
      Vec2 first_pixel;
    };
    std::vector<Candidate> candidates;
    for (const auto& [id, track] : tracks_) {
      if (filter_.has_landmark(id)) continue;
      if (!track.observation_in(frame_)) continue;
      // Eligible observations: unmasked with a resolvable pose.
      int count = 0;
      int first_frame = -1;
      Vec2 first_pixel = Vec2::Zero();
      for (const auto& o : track.observations) {
        if (o.semantic_weight == 0) continue;
        if (!filter_.ref_camera_pose(o.frame)) continue;
        if (first_frame < 0) {
          first_frame = o.frame;
          first_pixel = o.pixel;
        }
        ++count;
      }
      if (count >= 2) {
        candidates.push_back({id, count, first_frame, first_pixel});
      }
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                if (a.count != b.count) return a.count > b.count;
                if (a.first_frame != b.first_frame)
                  return a.first_frame < b.first_frame;
                if (a.first_pixel.y() != b.first_pixel.y())
                  return a.first_pixel.y() < b.first_pixel.y();
                return a.first_pixel.x() < b.first_pixel.x();
              });

    int budget = cfg_.filter.max_landmarks -
                 int(filter_.state().nav.landmarks.size());
    for (const auto& cand : candidates) {
      if (budget <= 0) break;
      Track& track = tracks_[cand.id];
      const TrackObservation* first = nullptr;
      const TrackObservation* curr = track.observation_in(frame_);
      for (const auto& o : track.observations) {
        if (o.semantic_weight == 0 || !filter_.ref_camera_pose(o.frame)) continue;
        first = &o;
        break;
      }
      if (!first || !curr || curr->semantic_weight == 0) continue;

      const Pose t_rc_first = *filter_.ref_camera_pose(first->frame);
      const Pose t_rc_curr = *filter_.ref_camera_pose(frame_);
      const Ray ray_first = observation_ray(t_rc_first, first->pixel);
      const Ray ray_curr = observation_ray(t_rc_curr, curr->pixel);
      const double parallax =
          std::acos(std::clamp(ray_first.dir.dot(ray_curr.dir), -1.0, 1.0));

      std::optional<Vec3> x_ref;
      if (parallax > cfg_.filter.min_parallax_deg * M_PI / 180.0) {
        x_ref = triangulate(ray_first, ray_curr);
      } else if (cfg_.filter.enable_depth_factors && cfg_.filter.depth_seed_init &&
                 curr->depth_sample > 0) {
        x_ref = t_rc_curr *
                backproject(curr->pixel, curr->depth_sample, filter_.intrinsics());
      }
      if (!x_ref) continue;
      // Sanity: in front of both cameras within the plausible range.
      const Vec3 in_first = t_rc_first.inverse() * *x_ref;
      const Vec3 in_curr = t_rc_curr.inverse() * *x_ref;
      if (in_first.z() < 0.1 || in_curr.z() < 0.1 || in_curr.z() > 60.0) continue;

      filter_.add_landmark(cand.id, *x_ref);
      track.has_landmark = true;
      --budget;

      // Stack every eligible windowed observation in this frame's update.
      std::vector<VisualObservation> rows;
      for (const auto& o : track.observations) {
        if (o.semantic_weight == 0 || !filter_.ref_camera_pose(o.frame)) continue;
        rows.push_back({cand.id, o.frame, o.pixel, double(o.semantic_weight)});
      }
      pending_rows_[cand.id] = std::move(rows);
    }
  }

  VioConfig cfg_;
  SqrtFilter filter_;
  std::vector<uint16_t> dynamic_ids_;
  std::map<int64_t, Track> tracks_;
  std::map<int64_t, std::vector<VisualObservation>> pending_rows_;
  std::vector<KeypointObs> prev_keypoints_;
  std::vector<int64_t> prev_track_ids_;
  int64_t next_track_id_ = 0;
  int frame_ = 0;
  bool predicted_ = false;
  Trajectory trajectory_;
  std::vector<OdometrySample> odometry_;
};

}  // namespace sgslam
