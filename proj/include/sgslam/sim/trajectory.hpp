#pragma once

// Ground-truth motion profiles. Every profile is C2-continuous in position
// with yaw following the velocity direction; samples carry analytic world
// acceleration and body angular rate so IMU synthesis needs no numerical
// differentiation.
//
// Convention: each profile is phase-shifted so the starting heading is +x,
// and the emitted samples are translated so the first pose sits exactly at
// the world origin with identity rotation. `trajectory_start_point` reports
// where that start lies in the scene's own coordinates; the simulator
// translates the scene by its negation so world and scene frames coincide.

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgslam/core/geometry.hpp"
#include "sgslam/sim/scene.hpp"

namespace sgslam {

struct TrajectorySample {
  double t = 0.0;
  Pose pose;                    // T_WB, body FLU (x forward, z up)
  Vec3 velocity = Vec3::Zero(); // world frame
  Vec3 accel = Vec3::Zero();    // world frame
  Vec3 angular_velocity = Vec3::Zero();  // body frame
};

enum class MotionProfile { kLine, kCorridorLoop, kRoomScan, kFigureEight };

inline MotionProfile profile_from_string(const std::string& s) {
  if (s == "line") return MotionProfile::kLine;
  if (s == "corridor_loop") return MotionProfile::kCorridorLoop;
  if (s == "room_scan") return MotionProfile::kRoomScan;
  if (s == "figure_eight") return MotionProfile::kFigureEight;
  throw Error(ErrorCode::kParseError, "unknown motion profile: " + s);
}

struct TrajectoryParams {
  MotionProfile profile = MotionProfile::kFigureEight;
  Vec3 line_velocity = Vec3(1.0, 0.0, 0.0);  // +x only (identity start)
  Vec2 center = Vec2(0.0, 0.0);              // curve center in scene coords
  double radius_x = 2.0;
  double radius_y = 1.2;
  double period = 20.0;   // seconds per loop
  double height = 1.4;    // camera height above the floor
  std::vector<Vec2> scan_waypoints;  // room_scan control points (scene coords)
};

namespace sim_detail {

struct CurveEval {
  Vec2 p, dp, ddp;
};

/// Periodic natural cubic spline through control points, uniform knots.
class PeriodicSpline {
 public:
  PeriodicSpline(const std::vector<Vec2>& pts, double period)
      : pts_(pts), period_(period) {
    const int n = int(pts.size());
    if (n < 3) {
      throw Error(ErrorCode::kSceneInvalid, "room_scan needs >= 3 waypoints");
    }
    const double h = period_ / n;
    MatX a = MatX::Zero(n, n);
    MatX rhs(n, 2);
    for (int i = 0; i < n; ++i) {
      a(i, (i + n - 1) % n) = h / 6.0;
      a(i, i) = 4.0 * h / 6.0;
      a(i, (i + 1) % n) = h / 6.0;
      const Vec2 d =
          (pts_[(i + 1) % n] - 2.0 * pts_[i] + pts_[(i + n - 1) % n]) / h;
      rhs(i, 0) = d.x();
      rhs(i, 1) = d.y();
    }
    MatX m = a.fullPivLu().solve(rhs);
    m2_.resize(n);
    for (int i = 0; i < n; ++i) m2_[i] = Vec2(m(i, 0), m(i, 1));
  }

  CurveEval eval(double t) const {
    const int n = int(pts_.size());
    const double h = period_ / n;
    double s = std::fmod(t, period_);
    if (s < 0) s += period_;
    const int i = std::min(int(s / h), n - 1);
    const double u = s - i * h;
    const Vec2 p0 = pts_[i], p1 = pts_[(i + 1) % n];
    const Vec2 m0 = m2_[i], m1 = m2_[(i + 1) % n];
    CurveEval e;
    const double a = (h - u), b = u;
    e.p = (m0 * a * a * a + m1 * b * b * b) / (6.0 * h) +
          (p0 / h - m0 * h / 6.0) * a + (p1 / h - m1 * h / 6.0) * b;
    e.dp = (-m0 * a * a + m1 * b * b) / (2.0 * h) - (p0 / h - m0 * h / 6.0) +
           (p1 / h - m1 * h / 6.0);
    e.ddp = (m0 * a + m1 * b) / h;
    return e;
  }

 private:
  std::vector<Vec2> pts_;
  double period_;
  std::vector<Vec2> m2_;
};

/// Raw curve in scene coordinates with the starting phase already applied.
inline std::function<CurveEval(double)> make_curve(const SceneSpec& spec,
                                                   const TrajectoryParams& p) {
  const double w = 2.0 * M_PI / p.period;
  switch (p.profile) {
    case MotionProfile::kLine: {
      if (std::abs(p.line_velocity.y()) > 1e-12 || p.line_velocity.x() <= 0) {
        throw Error(ErrorCode::kSceneInvalid,
                    "line profile must move along +x (identity start)");
      }
      const Vec2 v(p.line_velocity.x(), 0.0);
      const Vec2 c = p.center;
      return [c, v](double t) {
        return CurveEval{c + t * v, v, Vec2::Zero()};
      };
    }
    case MotionProfile::kCorridorLoop: {
      // Rounded-rectangle loop; phase 3*pi/2 starts at the bottom moving +x.
      const double a = p.radius_x, b = p.radius_y;
      const Vec2 c = p.center;
      return [c, a, b, w](double t) {
        const double th = w * t + 1.5 * M_PI;
        CurveEval e;
        e.p = c + Vec2(a * (1.12 * std::cos(th) - 0.12 * std::cos(3 * th)),
                       b * (1.12 * std::sin(th) + 0.12 * std::sin(3 * th)));
        e.dp = Vec2(a * w * (-1.12 * std::sin(th) + 0.36 * std::sin(3 * th)),
                    b * w * (1.12 * std::cos(th) + 0.36 * std::cos(3 * th)));
        e.ddp =
            Vec2(a * w * w * (-1.12 * std::cos(th) + 1.08 * std::cos(3 * th)),
                 b * w * w * (-1.12 * std::sin(th) - 1.08 * std::sin(3 * th)));
        return e;
      };
    }
    case MotionProfile::kFigureEight: {
      // Gerono-style eight; phase pi/4 makes the start heading +x.
      const double a = p.radius_x, b = p.radius_y;
      const Vec2 c = p.center;
      return [c, a, b, w](double t) {
        const double th = w * t + 0.25 * M_PI;
        CurveEval e;
        e.p = c + Vec2(a * std::sin(th), 0.5 * b * std::sin(2.0 * th));
        e.dp = Vec2(a * w * std::cos(th), b * w * std::cos(2.0 * th));
        e.ddp = Vec2(-a * w * w * std::sin(th),
                     -2.0 * b * w * w * std::sin(2.0 * th));
        return e;
      };
    }
    case MotionProfile::kRoomScan: {
      std::vector<Vec2> pts = p.scan_waypoints;
      if (pts.empty()) {
        // Perimeter sweep of the first room; edge midpoints damp the
        // overshoot of the periodic spline at the corners.
        const RoomSpec& r = spec.rooms.front();
        const double mx = 1.0;
        const double x0 = r.min.x() + mx, x1 = r.max.x() - mx;
        const double y0 = r.min.y() + mx, y1 = r.max.y() - mx;
        const double xm = 0.5 * (x0 + x1), ym = 0.5 * (y0 + y1);
        pts = {Vec2(x0, y0), Vec2(xm, y0), Vec2(x1, y0), Vec2(x1, ym),
               Vec2(x1, y1), Vec2(xm, y1), Vec2(x0, y1), Vec2(x0, ym)};
      }
      auto spline = std::make_shared<PeriodicSpline>(pts, p.period);
      // Numeric phase: find a crossing of dy = 0 with dx > 0 and bisect.
      double t0 = 0.0;
      bool found = false;
      const int n_scan = 4096;
      double prev_dy = spline->eval(0.0).dp.y();
      for (int i = 1; i <= n_scan && !found; ++i) {
        const double t = p.period * double(i) / n_scan;
        const CurveEval e = spline->eval(t);
        if (prev_dy * e.dp.y() <= 0.0 && e.dp.x() > 0.0) {
          double lo = p.period * double(i - 1) / n_scan, hi = t;
          for (int k = 0; k < 80; ++k) {
            const double mid = 0.5 * (lo + hi);
            if (spline->eval(lo).dp.y() * spline->eval(mid).dp.y() <= 0.0) {
              hi = mid;
            } else {
              lo = mid;
            }
          }
          t0 = 0.5 * (lo + hi);
          found = true;
        }
        prev_dy = e.dp.y();
      }
      if (!found) t0 = 0.0;  // fall back; residual yaw handled downstream
      return [spline, t0](double t) { return spline->eval(t + t0); };
    }
  }
  throw Error(ErrorCode::kDomainViolation, "unreachable profile");
}

}  // namespace sim_detail

/// Where the identity-rotation start of this profile lies in the scene's own
/// coordinates. The simulator translates the scene by the negation so the
/// world origin coincides with the first body pose.
inline Vec2 trajectory_start_point(const SceneSpec& spec,
                                   const TrajectoryParams& params) {
  return sim_detail::make_curve(spec, params)(0.0).p;
}

inline SceneSpec translate_scene(const SceneSpec& spec, const Vec3& d) {
  SceneSpec out = spec;
  for (auto& r : out.rooms) {
    r.min += Vec2(d.x(), d.y());
    r.max += Vec2(d.x(), d.y());
    r.floor_z += d.z();
  }
  for (auto& o : out.objects) {
    o.box.min += d;
    o.box.max += d;
  }
  for (auto& a : out.agents) {
    for (auto& w : a.waypoints) w += Vec2(d.x(), d.y());
  }
  return out;
}

/// Samples the requested profile at `rate` Hz for `duration` seconds. The
/// raw curve is validated against the scene (free space with a wall margin,
/// doorway crossings allowed, clear of objects); emitted samples start at
/// the origin with identity rotation.
inline std::vector<TrajectorySample> generate_trajectory(
    const SceneSpec& spec, const TrajectoryParams& params, double duration,
    double rate) {
  if (duration < 0 || rate <= 0) {
    throw Error(ErrorCode::kDomainViolation,
                "generate_trajectory: duration >= 0 and rate > 0 required");
  }
  auto curve = sim_detail::make_curve(spec, params);
  const sim_detail::CurveEval e0 = curve(0.0);
  if (e0.dp.norm() < 1e-9) {
    throw Error(ErrorCode::kSceneInvalid,
                "trajectory must start with nonzero planar velocity");
  }
  // Residual rotation is ~1e-15 by phase construction; applying it makes the
  // identity start exact.
  const double yaw0 = std::atan2(e0.dp.y(), e0.dp.x());
  const Eigen::Rotation2Dd unrot(-yaw0);
  const Vec2 p0 = e0.p;

  const World world = build_world(spec);
  const int n = int(std::llround(duration * rate)) + 1;
  std::vector<TrajectorySample> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double t = double(i) / rate;
    const sim_detail::CurveEval e = curve(t);

    // Free-space validation in scene coordinates.
    const Vec3 scene_p(e.p.x(), e.p.y(), params.height);
    bool ok = false;
    for (const auto& r : spec.rooms) {
      const double margin = 0.25;
      if (scene_p.x() > r.min.x() + margin && scene_p.x() < r.max.x() - margin &&
          scene_p.y() > r.min.y() + margin && scene_p.y() < r.max.y() - margin &&
          scene_p.z() > 0.2 && scene_p.z() < r.height - 0.2) {
        ok = true;
        break;
      }
    }
    for (const auto& d : world.doorways) {
      if (!ok &&
          (Vec2(scene_p.x(), scene_p.y()) - Vec2(d.center.x(), d.center.y()))
                  .norm() < 0.5 * spec.door_width &&
          scene_p.z() > 0.2 && scene_p.z() < spec.door_height - 0.15) {
        ok = true;
      }
    }
    if (!ok) {
      throw Error(ErrorCode::kSceneInvalid,
                  "trajectory leaves free space at t=" + std::to_string(t));
    }
    for (const auto& o : spec.objects) {
      AABox inflated(o.box.min - Vec3::Constant(0.1),
                     o.box.max + Vec3::Constant(0.1));
      if (inflated.contains(scene_p)) {
        throw Error(ErrorCode::kSceneInvalid,
                    "trajectory intersects object at t=" + std::to_string(t));
      }
    }

    const Vec2 p = unrot * (e.p - p0);
    const Vec2 dp = unrot * e.dp;
    const Vec2 ddp = unrot * e.ddp;

    TrajectorySample s;
    s.t = t;
    const double yaw = std::atan2(dp.y(), dp.x());
    s.pose = Pose(Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())),
                  Vec3(p.x(), p.y(), 0.0), "body", "world");
    s.velocity = Vec3(dp.x(), dp.y(), 0.0);
    s.accel = Vec3(ddp.x(), ddp.y(), 0.0);
    const double speed2 = dp.squaredNorm();
    const double yaw_rate =
        speed2 < 1e-12 ? 0.0 : (dp.x() * ddp.y() - dp.y() * ddp.x()) / speed2;
    s.angular_velocity =
        s.pose.rotation_matrix().transpose() * Vec3(0, 0, yaw_rate);
    out.push_back(s);
  }
  return out;
}

}  // namespace sgslam
