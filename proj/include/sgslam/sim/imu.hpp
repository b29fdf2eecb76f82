#pragma once

// IMU synthesis from analytic trajectory samples, plus the midpoint
// strapdown integrator used to sanity-check stream/trajectory consistency.

#include <vector>

#include "sgslam/core/rng.hpp"
#include "sgslam/sim/trajectory.hpp"

namespace sgslam {

inline const Vec3 kGravity(0.0, 0.0, -9.81);

struct ImuSample {
  double t = 0.0;
  Vec3 gyro = Vec3::Zero();   // rad/s, body frame
  Vec3 accel = Vec3::Zero();  // m/s^2, specific force in body frame
};

/// Specific force f = R^T (a_world - g) + bias + noise; gyro = body rate +
/// bias + noise. Biases follow random walks driven by the configured
/// densities; the trajectory samples must already be at the IMU rate.
inline std::vector<ImuSample> synthesize_imu(
    const std::vector<TrajectorySample>& traj, const NoiseSpec& noise) {
  noise.validate();
  std::vector<ImuSample> out;
  out.reserve(traj.size());
  std::mt19937_64 rng = make_rng(noise.seed, RngStream::kImu);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec3 bg = Vec3::Zero(), ba = Vec3::Zero();
  double prev_t = traj.empty() ? 0.0 : traj.front().t;
  for (const auto& s : traj) {
    const double dt = std::max(s.t - prev_t, 1e-6);
    prev_t = s.t;
    const double sqrt_dt = std::sqrt(dt);
    const Mat3 r_bw = s.pose.rotation_matrix().transpose();
    ImuSample m;
    m.t = s.t;
    m.gyro = s.angular_velocity + bg;
    m.accel = r_bw * (s.accel - kGravity) + ba;
    if (noise.gyro_noise > 0) {
      for (int i = 0; i < 3; ++i) {
        m.gyro[i] += noise.gyro_noise / sqrt_dt * gauss(rng);
      }
    }
    if (noise.accel_noise > 0) {
      for (int i = 0; i < 3; ++i) {
        m.accel[i] += noise.accel_noise / sqrt_dt * gauss(rng);
      }
    }
    out.push_back(m);
    for (int i = 0; i < 3; ++i) {
      bg[i] += noise.gyro_bias_walk * sqrt_dt * gauss(rng);
      ba[i] += noise.accel_bias_walk * sqrt_dt * gauss(rng);
    }
  }
  return out;
}

struct StrapdownState {
  Quat orientation = Quat::Identity();  // R_WB
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
};

/// One midpoint strapdown step between consecutive IMU samples. `gravity`
/// is expressed in the same frame as the state (world by default).
inline StrapdownState strapdown_step(const StrapdownState& x,
                                     const ImuSample& a, const ImuSample& b,
                                     const Vec3& gyro_bias = Vec3::Zero(),
                                     const Vec3& accel_bias = Vec3::Zero(),
                                     const Vec3& gravity = kGravity) {
  const double dt = b.t - a.t;
  if (dt <= 0) {
    throw Error(ErrorCode::kNonMonotoneTime, "strapdown: non-increasing time");
  }
  const Vec3 w = 0.5 * (a.gyro + b.gyro) - gyro_bias;
  const Vec3 f = 0.5 * (a.accel + b.accel) - accel_bias;
  StrapdownState out;
  const Mat3 r0 = x.orientation.toRotationMatrix();
  const Mat3 r_mid = r0 * so3_exp(0.5 * w * dt);
  const Vec3 acc = r_mid * f + gravity;
  out.orientation = Quat(r0 * so3_exp(w * dt)).normalized();
  out.velocity = x.velocity + acc * dt;
  out.position = x.position + x.velocity * dt + 0.5 * acc * dt * dt;
  return out;
}

}  // namespace sgslam
