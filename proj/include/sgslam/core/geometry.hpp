#pragma once

// SE(3)/SO(3) algebra, rigid transforms with frame tags, and the pinhole
// camera model. Everything here is a pure value type; twists use the
// (angular, linear) ordering throughout.

#include <cmath>
#include <string>
#include <utility>

#include "sgslam/core/types.hpp"

namespace sgslam {

inline constexpr double kSmallAngle = 1e-8;  // Taylor-branch switch (rad)

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  // clang-format off
  s <<     0, -v.z(),  v.y(),
       v.z(),      0, -v.x(),
      -v.y(),  v.x(),      0;
  // clang-format on
  return s;
}

/// Rodrigues formula with small-angle branch.
inline Mat3 so3_exp(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const Mat3 w = skew(omega);
  if (theta2 < kSmallAngle * kSmallAngle) {
    return Mat3::Identity() + w + 0.5 * w * w;
  }
  const double theta = std::sqrt(theta2);
  return Mat3::Identity() + (std::sin(theta) / theta) * w +
         ((1.0 - std::cos(theta)) / theta2) * w * w;
}

/// Rotation-matrix logarithm. Throws for angles within 1e-6 of pi where the
/// axis is numerically ill-defined.
inline Vec3 so3_log(const Mat3& r) {
  const double cos_theta = std::min(1.0, std::max(-1.0, (r.trace() - 1.0) * 0.5));
  const double theta = std::acos(cos_theta);
  if (theta > M_PI - 1e-6) {
    throw Error(ErrorCode::kDegenerateRotation,
                "so3_log: rotation angle within 1e-6 of pi");
  }
  Vec3 axis_sin(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  if (theta < kSmallAngle) {
    return 0.5 * axis_sin;
  }
  return (theta / (2.0 * std::sin(theta))) * axis_sin;
}

/// Left Jacobian of SO(3).
inline Mat3 so3_left_jacobian(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const Mat3 w = skew(omega);
  if (theta2 < kSmallAngle * kSmallAngle) {
    return Mat3::Identity() + 0.5 * w + (1.0 / 6.0) * w * w;
  }
  const double theta = std::sqrt(theta2);
  return Mat3::Identity() + ((1.0 - std::cos(theta)) / theta2) * w +
         ((theta - std::sin(theta)) / (theta2 * theta)) * w * w;
}

inline Mat3 so3_left_jacobian_inverse(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const Mat3 w = skew(omega);
  if (theta2 < kSmallAngle * kSmallAngle) {
    return Mat3::Identity() - 0.5 * w + (1.0 / 12.0) * w * w;
  }
  const double theta = std::sqrt(theta2);
  const double half = 0.5 * theta;
  const double cot_term = 1.0 / theta2 - 0.5 * (1.0 + std::cos(theta)) /
                                             (theta * std::sin(theta));
  return Mat3::Identity() - 0.5 * w + cot_term * w * w;
}

/// Lie-algebra element of SE(3): rotational part in radians, translational
/// part in meters.
struct Twist {
  Vec3 angular = Vec3::Zero();
  Vec3 linear = Vec3::Zero();

  Vec6 vector() const {
    Vec6 v;
    v << angular, linear;
    return v;
  }
  static Twist from_vector(const Vec6& v) {
    return Twist{v.head<3>(), v.tail<3>()};
  }
};

/// Rigid transform mapping points from `frame_from` into `frame_to`.
/// Rotation is stored as a unit quaternion and renormalized after every
/// composition so long chains stay orthonormal.
struct Pose {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();
  std::string frame_from;
  std::string frame_to;

  Pose() = default;
  Pose(const Quat& q, const Vec3& t, std::string from = {}, std::string to = {})
      : rotation(q.normalized()),
        translation(t),
        frame_from(std::move(from)),
        frame_to(std::move(to)) {}
  Pose(const Mat3& r, const Vec3& t, std::string from = {}, std::string to = {})
      : rotation(Quat(r).normalized()),
        translation(t),
        frame_from(std::move(from)),
        frame_to(std::move(to)) {}

  static Pose identity() { return Pose(); }

  Mat3 rotation_matrix() const { return rotation.toRotationMatrix(); }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation_matrix();
    m.topRightCorner<3, 1>() = translation;
    return m;
  }

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

  Pose operator*(const Pose& rhs) const {
    if (!frame_from.empty() && !rhs.frame_to.empty() &&
        frame_from != rhs.frame_to) {
      throw Error(ErrorCode::kFrameMismatch,
                  "pose composition: lhs maps from '" + frame_from +
                      "' but rhs maps to '" + rhs.frame_to + "'");
    }
    Pose out;
    out.rotation = (rotation * rhs.rotation).normalized();
    out.translation = rotation * rhs.translation + translation;
    out.frame_from = rhs.frame_from;
    out.frame_to = frame_to;
    return out;
  }

  Pose inverse() const {
    Pose out;
    out.rotation = rotation.conjugate();
    out.translation = -(out.rotation * translation);
    out.frame_from = frame_to;
    out.frame_to = frame_from;
    return out;
  }
};

/// exp: se(3) -> SE(3). exp(0) is the identity.
inline Pose exp_se3(const Twist& xi) {
  Pose p;
  p.rotation = Quat(so3_exp(xi.angular)).normalized();
  p.translation = so3_left_jacobian(xi.angular) * xi.linear;
  return p;
}

/// log: SE(3) -> se(3). Inverse of exp_se3 away from the angle-pi locus.
inline Twist log_se3(const Pose& t) {
  Twist xi;
  xi.angular = so3_log(t.rotation_matrix());
  xi.linear = so3_left_jacobian_inverse(xi.angular) * t.translation;
  return xi;
}

/// Adjoint of SE(3) acting on (angular, linear) twists.
inline Mat6 adjoint_se3(const Pose& t) {
  const Mat3 r = t.rotation_matrix();
  Mat6 adj = Mat6::Zero();
  adj.topLeftCorner<3, 3>() = r;
  adj.bottomLeftCorner<3, 3>() = skew(t.translation) * r;
  adj.bottomRightCorner<3, 3>() = r;
  return adj;
}

namespace geometry_detail {

/// Coupling block of the SE(3) left Jacobian (rotation omega, linear v).
inline Mat3 se3_q_block(const Vec3& omega, const Vec3& v) {
  const Mat3 w = skew(omega);
  const Mat3 p = skew(v);
  const double theta2 = omega.squaredNorm();
  double c2, c3, c4;
  if (theta2 < 1e-8) {
    c2 = 1.0 / 6.0 - theta2 / 120.0;
    c3 = -1.0 / 24.0 + theta2 / 720.0;
    c4 = 0.5 * (c3 + 3.0 * (1.0 / 120.0 - theta2 / 2520.0));
  } else {
    const double theta = std::sqrt(theta2);
    const double s = std::sin(theta), c = std::cos(theta);
    c2 = (theta - s) / (theta2 * theta);
    c3 = (1.0 - 0.5 * theta2 - c) / (theta2 * theta2);
    c4 = 0.5 * (c3 - 3.0 * (theta - s - theta2 * theta / 6.0) /
                         (theta2 * theta2 * theta));
  }
  Mat3 q = 0.5 * p;
  q += c2 * (w * p + p * w + w * p * w);
  q -= c3 * (w * w * p + p * w * w - 3.0 * w * p * w);
  q -= c4 * (w * p * w * w + w * w * p * w);
  return q;
}

}  // namespace geometry_detail

/// Left Jacobian of SE(3) for (angular, linear)-ordered twists.
inline Mat6 se3_left_jacobian(const Twist& xi) {
  const Mat3 jl = so3_left_jacobian(xi.angular);
  Mat6 out = Mat6::Zero();
  out.topLeftCorner<3, 3>() = jl;
  out.bottomLeftCorner<3, 3>() = geometry_detail::se3_q_block(xi.angular, xi.linear);
  out.bottomRightCorner<3, 3>() = jl;
  return out;
}

inline Mat6 se3_left_jacobian_inverse(const Twist& xi) {
  const Mat3 jli = so3_left_jacobian_inverse(xi.angular);
  const Mat3 q = geometry_detail::se3_q_block(xi.angular, xi.linear);
  Mat6 out = Mat6::Zero();
  out.topLeftCorner<3, 3>() = jli;
  out.bottomLeftCorner<3, 3>() = -jli * q * jli;
  out.bottomRightCorner<3, 3>() = jli;
  return out;
}

/// Right Jacobian inverse: Log(Exp(xi) Exp(delta)) ~ xi + Jr_inv(xi) delta.
inline Mat6 se3_right_jacobian_inverse(const Twist& xi) {
  Twist neg;
  neg.angular = -xi.angular;
  neg.linear = -xi.linear;
  return se3_left_jacobian_inverse(neg);
}

/// Pinhole intrinsics; pixel coordinates are continuous with pixel (i, j)
/// sampled exactly at (i, j).
struct CameraIntrinsics {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  int width = 0, height = 0;

  CameraIntrinsics() = default;
  CameraIntrinsics(double fx_, double fy_, double cx_, double cy_, int w, int h)
      : fx(fx_), fy(fy_), cx(cx_), cy(cy_), width(w), height(h) {
    if (fx <= 0 || fy <= 0 || w <= 0 || h <= 0) {
      throw Error(ErrorCode::kDomainViolation,
                  "CameraIntrinsics: fx, fy, width, height must be positive");
    }
  }

  bool in_bounds(const Vec2& px) const {
    return px.x() >= 0.0 && px.y() >= 0.0 && px.x() <= width - 1 &&
           px.y() <= height - 1;
  }
};

/// Projects a camera-frame point; returns (pixel, depth) with depth = z.
inline std::pair<Vec2, double> project(const Vec3& p_cam,
                                       const CameraIntrinsics& k) {
  if (p_cam.z() <= 0.0) {
    throw Error(ErrorCode::kBehindCamera, "project: point has non-positive z");
  }
  const double inv_z = 1.0 / p_cam.z();
  return {Vec2(k.fx * p_cam.x() * inv_z + k.cx, k.fy * p_cam.y() * inv_z + k.cy),
          p_cam.z()};
}

/// Depth of a camera-frame point as seen by the projection (the z component).
inline double project_depth(const Vec3& p_cam) { return p_cam.z(); }

inline Vec3 backproject(const Vec2& pixel, double depth,
                        const CameraIntrinsics& k) {
  if (depth <= 0.0) {
    throw Error(ErrorCode::kInvalidDepth, "backproject: depth must be positive");
  }
  return Vec3((pixel.x() - k.cx) / k.fx * depth,
              (pixel.y() - k.cy) / k.fy * depth, depth);
}

/// Unit-less ray direction through a pixel, scaled so the z component is 1;
/// a point at parameter t along it has camera depth t.
inline Vec3 pixel_ray(const Vec2& pixel, const CameraIntrinsics& k) {
  return Vec3((pixel.x() - k.cx) / k.fx, (pixel.y() - k.cy) / k.fy, 1.0);
}

}  // namespace sgslam
