#pragma once

// Robocentric square-root information filter. The error state lives in the
// frame of the latest keyframe clone; the factor R (upper triangular, with
// R^T R the information matrix) and right-hand side d are maintained by
// Givens updates for measurements and by reorder-eliminate QR passes for
// propagation and marginalization. Between updates d is identically zero:
// every solved increment is composed into the linearization point.
//
// Error-state ordering: [dtheta(3) dp(3) dv(3) dbg(3) dba(3) | clones 6 each,
// oldest first | landmarks 3 each]. Pose errors use the right perturbation
// R = R_hat * Exp(dtheta), positions/velocities/landmarks are additive in
// the reference frame, so re-anchoring only rotates the affected columns.

#include <deque>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sgslam/core/geometry.hpp"
#include "sgslam/sim/imu.hpp"
#include "sgslam/vio/frontend.hpp"

namespace sgslam {

// ---------------------------------------------------------------------------
// Square-root primitives
// ---------------------------------------------------------------------------

/// Givens-triangularizes the stack [R; A] with rhs [d; b] in place. Returns
/// the norm of the residual component discarded after triangularization.
inline double qr_update(MatX& r, VecX& d, const MatX& a_in, const VecX& b_in) {
  const Eigen::Index n = r.rows();
  if (a_in.rows() == 0) return 0.0;
  if (a_in.cols() != n || b_in.size() != a_in.rows()) {
    throw Error(ErrorCode::kDomainViolation, "qr_update: dimension mismatch");
  }
  double discarded_sq = 0.0;
  VecX row(n);
  for (Eigen::Index k = 0; k < a_in.rows(); ++k) {
    row = a_in.row(k).transpose();
    double beta = b_in[k];
    for (Eigen::Index j = 0; j < n; ++j) {
      const double aj = row[j];
      if (aj == 0.0) continue;
      const double rjj = r(j, j);
      const double g = std::hypot(rjj, aj);
      if (g == 0.0) continue;
      const double c = rjj / g, s = aj / g;
      for (Eigen::Index col = j; col < n; ++col) {
        const double rv = r(j, col), av = row[col];
        r(j, col) = c * rv + s * av;
        row[col] = -s * rv + c * av;
      }
      const double dv = d[j];
      d[j] = c * dv + s * beta;
      beta = -s * dv + c * beta;
    }
    discarded_sq += beta * beta;
  }
  return std::sqrt(discarded_sq);
}

/// Enforces a nonnegative diagonal (row sign flips) and the regularization
/// floor on R's diagonal.
inline void normalize_sqrt_factor(MatX& r, VecX& d, double reg_floor) {
  const Eigen::Index n = r.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (r(i, i) < 0.0) {
      r.row(i) = -r.row(i);
      d[i] = -d[i];
    }
    if (r(i, i) < reg_floor) r(i, i) = reg_floor;
  }
}

/// Solves R x = d by back substitution; throws when a diagonal entry is
/// numerically singular even after regularization.
inline VecX back_substitute(const MatX& r, const VecX& d,
                            double singular_floor = 1e-12) {
  const Eigen::Index n = r.rows();
  VecX x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    double acc = d[i];
    for (Eigen::Index j = i + 1; j < n; ++j) acc -= r(i, j) * x[j];
    if (std::abs(r(i, i)) < singular_floor) {
      throw Error(ErrorCode::kEstimatorDegenerate,
                  "back_substitute: singular diagonal");
    }
    x[i] = acc / r(i, i);
  }
  return x;
}

// ---------------------------------------------------------------------------
// State containers
// ---------------------------------------------------------------------------

struct NavState {
  // Current IMU state in the reference-keyframe frame.
  Quat q_rb = Quat::Identity();
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 bg = Vec3::Zero();
  Vec3 ba = Vec3::Zero();

  struct Clone {
    int frame = -1;
    double timestamp = 0.0;
    Quat q = Quat::Identity();
    Vec3 p = Vec3::Zero();
  };
  std::vector<Clone> clones;  // oldest first

  struct LandmarkState {
    int64_t track_id = -1;
    Vec3 x = Vec3::Zero();  // reference frame
  };
  std::vector<LandmarkState> landmarks;

  // Bookkeeping outside the error state.
  Pose t_w_ref{Quat::Identity(), Vec3::Zero(), "ref", "world"};
  Vec3 g_ref = kGravity;

  int dim() const { return 15 + 6 * int(clones.size()) + 3 * int(landmarks.size()); }
  int clone_col(int i) const { return 15 + 6 * i; }
  int landmark_col(int j) const {
    return 15 + 6 * int(clones.size()) + 3 * j;
  }
  int landmark_index(int64_t track_id) const {
    for (size_t j = 0; j < landmarks.size(); ++j) {
      if (landmarks[j].track_id == track_id) return int(j);
    }
    return -1;
  }
};

struct SqrtState {
  MatX r;  // upper triangular square-root information factor
  VecX d;  // right-hand side (zero between updates)
  NavState nav;
};

struct FilterConfig {
  GateConfig gates;
  int max_clones = 8;
  int max_landmarks = 56;
  double prior_rot_sigma = 1e-5;
  double prior_pos_sigma = 1e-5;
  double prior_vel_sigma = 1e-3;
  double prior_bg_sigma = 0.02;
  double prior_ba_sigma = 0.10;
  // Assumed continuous-time noise densities (floored away from zero so the
  // whitening stays defined on noise-free streams).
  double gyro_noise = 2e-4;
  double accel_noise = 2e-3;
  double gyro_bias_walk = 1e-5;
  double accel_bias_walk = 1e-4;
  double reg_floor = 1e-9;
  double landmark_prior_weight = 1e-3;  // weak row added with new columns
  double min_parallax_deg = 1.0;
  int max_track_gap = 2;  // drop landmarks unobserved for this many frames
  bool enable_depth_factors = true;
  bool depth_seed_init = true;  // seed landmarks from depth when parallax-poor
  bool oracle_check = false;    // dense normal-equations cross-check per update
};

struct OdometrySample {
  double timestamp = 0.0;
  int frame = -1;
  Pose pose;            // T_WB
  Vec6 cov_diag = Vec6::Zero();  // pose-block diagonal of (R^T R)^{-1}
};

struct VisualObservation {
  int64_t track_id = -1;
  int frame = -1;  // must be the current frame or a cloned frame
  Vec2 pixel = Vec2::Zero();
  double weight = 1.0;  // semantic weight in [0, 1]
};

// ---------------------------------------------------------------------------
// Filter
// ---------------------------------------------------------------------------

class SqrtFilter {
 public:
  SqrtFilter(const FilterConfig& cfg, const CameraIntrinsics& intrinsics,
             const Pose& t_bc, const Vec3& initial_velocity_world)
      : cfg_(cfg), k_(intrinsics), t_bc_(t_bc) {
    cfg_.gates.validate();
    state_.nav.v = initial_velocity_world;
    state_.r = MatX::Zero(15, 15);
    state_.d = VecX::Zero(15);
    auto prior = [&](int col, double sigma) {
      for (int i = 0; i < 3; ++i) state_.r(col + i, col + i) = 1.0 / sigma;
    };
    prior(0, cfg_.prior_rot_sigma);
    prior(3, cfg_.prior_pos_sigma);
    prior(6, cfg_.prior_vel_sigma);
    prior(9, cfg_.prior_bg_sigma);
    prior(12, cfg_.prior_ba_sigma);
  }

  const SqrtState& state() const { return state_; }
  SqrtState& mutable_state() { return state_; }  // test hook
  int current_frame() const { return frame_; }
  double max_oracle_error() const { return max_oracle_error_; }

  /// World pose of the current IMU state (predicted after propagation,
  /// estimated after the update).
  Pose world_pose() const {
    return state_.nav.t_w_ref *
           Pose(state_.nav.q_rb, state_.nav.p, "body", "ref");
  }

  Pose world_camera_pose() const { return world_pose() * t_bc_; }

  /// Camera pose of a given frame in the reference frame; the current frame
  /// and all cloned frames are addressable.
  std::optional<Pose> ref_camera_pose(int frame) const {
    if (frame == frame_) {
      return Pose(state_.nav.q_rb, state_.nav.p, "body", "ref") * t_bc_;
    }
    for (const auto& c : state_.nav.clones) {
      if (c.frame == frame) {
        return Pose(c.q, c.p, "body", "ref") * t_bc_;
      }
    }
    return std::nullopt;
  }

  bool has_landmark(int64_t track_id) const {
    return state_.nav.landmark_index(track_id) >= 0;
  }

  std::optional<Vec3> landmark_ref(int64_t track_id) const {
    const int j = state_.nav.landmark_index(track_id);
    if (j < 0) return std::nullopt;
    return state_.nav.landmarks[size_t(j)].x;
  }

  /// Predicted reprojection residual (px) of a landmark in the current frame.
  std::optional<double> reprojection_residual(int64_t track_id,
                                              const Vec2& pixel) const {
    auto lm = landmark_ref(track_id);
    if (!lm) return std::nullopt;
    const Pose t_rc = *ref_camera_pose(frame_);
    const Vec3 p_c = t_rc.inverse() * *lm;
    if (p_c.z() <= 0.05) return std::nullopt;
    return (project(p_c, k_).first - pixel).norm();
  }

  /// Begins frame 0 at the gauge origin (identity pose by convention). The
  /// window's trailing sample (if any) seeds the next propagation so the
  /// integration has no gap at frame boundaries.
  void initialize(double timestamp, const std::vector<ImuSample>& window = {}) {
    frame_ = 0;
    timestamp_ = timestamp;
    if (!window.empty()) last_imu_ = window.back();
  }

  /// Propagates the mean by midpoint strapdown integration over the IMU
  /// window, retains the previous pose as a new clone, and eliminates the
  /// previous velocity/bias states. Re-anchors the reference frame to the
  /// new clone afterwards.
  void propagate(double timestamp, const std::vector<ImuSample>& window_in) {
    std::vector<ImuSample> window;
    if (last_imu_ && (window_in.empty() || window_in.front().t > last_imu_->t)) {
      window.push_back(*last_imu_);
    }
    window.insert(window.end(), window_in.begin(), window_in.end());
    if (window.size() < 2) {
      throw Error(ErrorCode::kEmptyInput, "propagate: imu window too short");
    }
    for (size_t i = 1; i < window.size(); ++i) {
      if (window[i].t <= window[i - 1].t) {
        throw Error(ErrorCode::kNonMonotoneTime,
                    "propagate: non-monotone imu timestamps");
      }
    }
    last_imu_ = window.back();

    // Mean propagation and accumulated (Phi, Qd) over the window.
    StrapdownState x;
    x.orientation = state_.nav.q_rb;
    x.position = state_.nav.p;
    x.velocity = state_.nav.v;
    MatX phi = MatX::Identity(15, 15);
    MatX qd = MatX::Zero(15, 15);
    for (size_t i = 1; i < window.size(); ++i) {
      const double dt = window[i].t - window[i - 1].t;
      const Vec3 w_hat =
          0.5 * (window[i - 1].gyro + window[i].gyro) - state_.nav.bg;
      const Vec3 a_hat =
          0.5 * (window[i - 1].accel + window[i].accel) - state_.nav.ba;
      const Mat3 r0 = x.orientation.toRotationMatrix();
      const Mat3 r_mid = r0 * so3_exp(0.5 * w_hat * dt);
      const Mat3 rot_dt = so3_exp(w_hat * dt);

      MatX f = MatX::Identity(15, 15);
      f.block<3, 3>(0, 0) = rot_dt.transpose();
      f.block<3, 3>(0, 9) = -so3_left_jacobian(-w_hat * dt) * dt;
      f.block<3, 3>(6, 0) = -r_mid * skew(a_hat) * dt;
      f.block<3, 3>(6, 12) = -r_mid * dt;
      f.block<3, 3>(3, 0) = -0.5 * r_mid * skew(a_hat) * dt * dt;
      f.block<3, 3>(3, 6) = Mat3::Identity() * dt;
      f.block<3, 3>(3, 12) = -0.5 * r_mid * dt * dt;

      MatX qstep = MatX::Zero(15, 15);
      const double sg2 = cfg_.gyro_noise * cfg_.gyro_noise * dt;
      const double sa2 = cfg_.accel_noise * cfg_.accel_noise * dt;
      qstep.block<3, 3>(0, 0) = sg2 * Mat3::Identity();
      qstep.block<3, 3>(6, 6) = sa2 * Mat3::Identity();
      qstep.block<3, 3>(3, 3) = 0.25 * dt * dt * sa2 * Mat3::Identity();
      qstep.block<3, 3>(9, 9) =
          cfg_.gyro_bias_walk * cfg_.gyro_bias_walk * dt * Mat3::Identity();
      qstep.block<3, 3>(12, 12) =
          cfg_.accel_bias_walk * cfg_.accel_bias_walk * dt * Mat3::Identity();

      phi = f * phi;
      qd = f * qd * f.transpose() + qstep;
      x = strapdown_step(x, window[i - 1], window[i], state_.nav.bg,
                         state_.nav.ba, state_.nav.g_ref);
    }

    // Whitened process factor: L^{-1} (dx_new - Phi dx_old) with Qd = L L^T.
    Eigen::LLT<MatX> llt(qd + 1e-16 * MatX::Identity(15, 15));
    MatX whiten = llt.matrixL().solve(MatX::Identity(15, 15));

    // Stack the old factor and the process rows over the column order
    // [marg(9: v,bg,ba) | new core(15) | old clones | old pose clone(6) | lms],
    // eliminate the first 9, and keep the rest.
    const int n_old = state_.nav.dim();
    const int n_clones = int(state_.nav.clones.size());
    const int n_lms = int(state_.nav.landmarks.size());
    const int n_new = n_old + 6;  // gained a clone
    MatX m = MatX::Zero(n_old + 15, 9 + n_new);
    VecX rhs = VecX::Zero(n_old + 15);

    // Column map from old layout to the stacked layout.
    auto stack_cols = [&](int old_col) -> int {
      if (old_col >= 6 && old_col < 15) return old_col - 6;  // v, bg, ba
      if (old_col < 3) return 9 + 15 + 6 * n_clones + old_col;       // old theta
      if (old_col < 6) return 9 + 15 + 6 * n_clones + old_col;       // old p
      // clones shift: old clone i at 15+6i -> stacked 9+15+6i
      if (old_col < 15 + 6 * n_clones) return 9 + old_col;
      // landmarks: old 15+6c+3j -> stacked 9+15+6c+6+3j
      return 9 + old_col + 6;
    };
    for (int row = 0; row < n_old; ++row) {
      for (int col = row; col < n_old; ++col) {
        m(row, stack_cols(col)) = state_.r(row, col);
      }
      rhs[row] = state_.d[row];
    }
    // Process rows: whiten * (dx_new - Phi dx_old) = noise.
    // dx_old columns: theta,p at the old-pose slot; v,bg,ba at the marg slot.
    MatX wphi = whiten * phi;
    for (int row = 0; row < 15; ++row) {
      for (int col = 0; col < 15; ++col) {
        const int dst = col < 3   ? 9 + 15 + 6 * n_clones + col      // theta
                        : col < 6 ? 9 + 15 + 6 * n_clones + col      // p
                                  : col - 6;                          // v,bg,ba
        m(n_old + row, dst) -= wphi(row, col);
      }
      for (int col = 0; col < 15; ++col) {
        m(n_old + row, 9 + col) += whiten(row, col);
      }
    }

    Eigen::HouseholderQR<MatX> qr(m);
    MatX rfull = qr.matrixQR().topRows(9 + n_new).triangularView<Eigen::Upper>();
    VecX dfull = (qr.householderQ().transpose() * rhs).head(9 + n_new);

    // Drop the eliminated block; the remainder is the new factor over
    // [core(15) | clones oldest..newest | landmarks].
    state_.r = rfull.bottomRightCorner(n_new, n_new);
    state_.d = dfull.tail(n_new);

    NavState::Clone clone;
    clone.frame = frame_;
    clone.timestamp = timestamp_;
    clone.q = state_.nav.q_rb;
    clone.p = state_.nav.p;
    state_.nav.clones.push_back(clone);

    state_.nav.q_rb = x.orientation;
    state_.nav.p = x.position;
    state_.nav.v = x.velocity;
    (void)n_lms;

    normalize_sqrt_factor(state_.r, state_.d, cfg_.reg_floor);
    ++frame_;
    timestamp_ = timestamp;

    reanchor_to_latest_clone();
  }

  /// Admits a landmark with a weak prior row; its position is given in the
  /// reference frame. Returns its landmark index.
  int add_landmark(int64_t track_id, const Vec3& x_ref) {
    const int n_old = state_.nav.dim();
    MatX r = MatX::Zero(n_old + 3, n_old + 3);
    r.topLeftCorner(n_old, n_old) = state_.r;
    VecX d = VecX::Zero(n_old + 3);
    d.head(n_old) = state_.d;
    for (int i = 0; i < 3; ++i) {
      r(n_old + i, n_old + i) = cfg_.landmark_prior_weight;
    }
    state_.r = std::move(r);
    state_.d = std::move(d);
    state_.nav.landmarks.push_back({track_id, x_ref});
    return int(state_.nav.landmarks.size()) - 1;
  }

  struct ResidualStack {
    MatX a;
    VecX b;
    int rows = 0;
  };

  /// Whitened measurement stack: visual reprojection rows scaled by
  /// sqrt(w)/sigma_px and sparse depth rows scaled by
  /// sqrt(lambda_d * eta) / sigma_d(z) with a single Huber IRLS pass.
  ResidualStack stack_residuals(
      const std::vector<VisualObservation>& observations,
      const std::vector<DepthCandidate>& depth_factors) const {
    const int n = state_.nav.dim();
    const int max_rows = 2 * int(observations.size()) + int(depth_factors.size());
    ResidualStack stack;
    stack.a = MatX::Zero(max_rows, n);
    stack.b = VecX::Zero(max_rows);

    for (const auto& obs : observations) {
      if (obs.weight <= 0.0) continue;  // masked rows are omitted
      const int j = state_.nav.landmark_index(obs.track_id);
      if (j < 0) continue;
      int pose_col = -1;
      std::optional<Pose> t_rb;
      if (obs.frame == frame_) {
        pose_col = 0;
        t_rb = Pose(state_.nav.q_rb, state_.nav.p);
      } else {
        for (size_t c = 0; c < state_.nav.clones.size(); ++c) {
          if (state_.nav.clones[c].frame == obs.frame) {
            pose_col = state_.nav.clone_col(int(c));
            t_rb = Pose(state_.nav.clones[c].q, state_.nav.clones[c].p);
            break;
          }
        }
      }
      if (pose_col < 0) continue;  // frame left the window

      const Vec3 x = state_.nav.landmarks[size_t(j)].x;
      const Mat3 r_rb = t_rb->rotation_matrix();
      const Vec3 q_b = r_rb.transpose() * (x - t_rb->translation);
      const Mat3 r_bc = t_bc_.rotation_matrix();
      const Vec3 p_c = r_bc.transpose() * (q_b - t_bc_.translation);
      if (p_c.z() <= 0.05) continue;

      Eigen::Matrix<double, 2, 3> dpi;
      const double iz = 1.0 / p_c.z();
      dpi << k_.fx * iz, 0, -k_.fx * p_c.x() * iz * iz,
             0, k_.fy * iz, -k_.fy * p_c.y() * iz * iz;
      const Mat3 dpc_dtheta = r_bc.transpose() * skew(q_b);
      const Mat3 dpc_dp = -(r_rb * r_bc).transpose();
      const Mat3 dpc_dx = (r_rb * r_bc).transpose();

      const Vec2 residual = obs.pixel - project(p_c, k_).first;
      const double scale = std::sqrt(obs.weight) / cfg_.gates.sigma_px;
      const int lm_col = state_.nav.landmark_col(j);
      stack.a.block<2, 3>(stack.rows, pose_col) = scale * dpi * dpc_dtheta;
      stack.a.block<2, 3>(stack.rows, pose_col + 3) = scale * dpi * dpc_dp;
      stack.a.block<2, 3>(stack.rows, lm_col) = scale * dpi * dpc_dx;
      stack.b.segment<2>(stack.rows) = scale * residual;
      stack.rows += 2;
    }

    for (const auto& f : depth_factors) {
      const int j = state_.nav.landmark_index(f.track_id);
      if (j < 0) continue;
      const Vec3 x = state_.nav.landmarks[size_t(j)].x;
      const Pose t_rb(state_.nav.q_rb, state_.nav.p);
      const Mat3 r_rb = t_rb.rotation_matrix();
      const Vec3 q_b = r_rb.transpose() * (x - t_rb.translation);
      const Mat3 r_bc = t_bc_.rotation_matrix();
      const Vec3 p_c = r_bc.transpose() * (q_b - t_bc_.translation);
      if (p_c.z() <= 0.05) continue;

      const double sigma = f.sigma_d;
      const double base = std::sqrt(cfg_.gates.lambda_d * double(f.weight)) / sigma;
      const double r_d = f.z - p_c.z();
      const double irls = std::sqrt(huber(r_d * base, cfg_.gates.huber_delta).irls_weight);
      const double scale = base * irls;

      const Vec3 dz_dtheta = (r_bc.transpose() * skew(q_b)).row(2);
      const Vec3 dz_dp = (-(r_rb * r_bc).transpose()).row(2);
      const Vec3 dz_dx = ((r_rb * r_bc).transpose()).row(2);
      const int lm_col = state_.nav.landmark_col(j);
      stack.a.block<1, 3>(stack.rows, 0) = scale * dz_dtheta.transpose();
      stack.a.block<1, 3>(stack.rows, 3) = scale * dz_dp.transpose();
      stack.a.block<1, 3>(stack.rows, lm_col) = scale * dz_dx.transpose();
      stack.b[stack.rows] = scale * r_d;
      stack.rows += 1;
    }

    stack.a.conservativeResize(stack.rows, n);
    stack.b.conservativeResize(stack.rows);
    return stack;
  }

  /// QR measurement update followed by back substitution and composition of
  /// the increment into the linearization point. Returns the discarded
  /// residual norm.
  double update(const ResidualStack& stack) {
    VecX delta_oracle;
    if (cfg_.oracle_check && stack.rows > 0) {
      // Dense normal-equations route, kept independent of the QR path.
      // Extended precision absorbs the squared conditioning of R^T R so the
      // comparison reflects the QR path's error, not the oracle's.
      using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
      using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
      const MatL r_l = state_.r.cast<long double>();
      const MatL a_l = stack.a.cast<long double>();
      const MatL info = r_l.transpose() * r_l + a_l.transpose() * a_l;
      const VecL rhs = r_l.transpose() * state_.d.cast<long double>() +
                       a_l.transpose() * stack.b.cast<long double>();
      delta_oracle = info.ldlt().solve(rhs).cast<double>();
    }

    const double eps = qr_update(state_.r, state_.d, stack.a, stack.b);
    normalize_sqrt_factor(state_.r, state_.d, cfg_.reg_floor);
    VecX delta = back_substitute(state_.r, state_.d);

    if (cfg_.oracle_check && stack.rows > 0) {
      const double rel = (delta - delta_oracle).norm() /
                         std::max(delta_oracle.norm(), 1e-12);
      max_oracle_error_ = std::max(max_oracle_error_, rel);
    }

    compose_increment(delta);
    state_.d.setZero();
    return eps;
  }

  /// Drops the oldest clones beyond the window and the listed landmarks via
  /// a reordering QR pass.
  void marginalize(const std::vector<int64_t>& dead_tracks) {
    const int n = state_.nav.dim();
    std::vector<int> drop_cols;
    int drop_clones = std::max(0, int(state_.nav.clones.size()) - cfg_.max_clones);
    for (int i = 0; i < drop_clones; ++i) {
      const int base = state_.nav.clone_col(i);
      for (int k = 0; k < 6; ++k) drop_cols.push_back(base + k);
    }
    std::vector<size_t> drop_lms;
    for (size_t j = 0; j < state_.nav.landmarks.size(); ++j) {
      for (int64_t id : dead_tracks) {
        if (state_.nav.landmarks[j].track_id == id) {
          drop_lms.push_back(j);
          break;
        }
      }
    }
    for (size_t j : drop_lms) {
      const int base = state_.nav.landmark_col(int(j));
      for (int k = 0; k < 3; ++k) drop_cols.push_back(base + k);
    }
    if (drop_cols.empty()) return;

    std::vector<bool> dropped(n, false);
    for (int c : drop_cols) dropped[size_t(c)] = true;
    std::vector<int> perm;  // dropped first, then kept in order
    for (int c : drop_cols) perm.push_back(c);
    for (int c = 0; c < n; ++c) {
      if (!dropped[size_t(c)]) perm.push_back(c);
    }

    MatX m(n, n);
    for (int c = 0; c < n; ++c) m.col(c) = state_.r.col(perm[size_t(c)]);
    Eigen::HouseholderQR<MatX> qr(m);
    MatX rfull = qr.matrixQR().triangularView<Eigen::Upper>();
    VecX dfull = qr.householderQ().transpose() * state_.d;

    const int keep = n - int(drop_cols.size());
    state_.r = rfull.bottomRightCorner(keep, keep);
    state_.d = dfull.tail(keep);

    state_.nav.clones.erase(state_.nav.clones.begin(),
                            state_.nav.clones.begin() + drop_clones);
    std::sort(drop_lms.rbegin(), drop_lms.rend());
    for (size_t j : drop_lms) {
      state_.nav.landmarks.erase(state_.nav.landmarks.begin() + long(j));
    }
    normalize_sqrt_factor(state_.r, state_.d, cfg_.reg_floor);
  }

  /// Current world-frame odometry sample with the pose-block covariance
  /// diagonal of (R^T R)^{-1}.
  OdometrySample emit_odometry() const {
    OdometrySample out;
    out.timestamp = timestamp_;
    out.frame = frame_;
    out.pose = world_pose();
    const MatX rt = state_.r.transpose();
    for (int i = 0; i < 6; ++i) {
      VecX e = VecX::Zero(state_.nav.dim());
      e[i] = 1.0;
      // Solve R^T y = e_i; then [(R^T R)^{-1}]_ii = |y|^2.
      VecX y = rt.triangularView<Eigen::Lower>().solve(e);
      out.cov_diag[i] = y.squaredNorm();
    }
    return out;
  }

  const FilterConfig& config() const { return cfg_; }
  const CameraIntrinsics& intrinsics() const { return k_; }
  const Pose& body_to_camera_pose() const { return t_bc_; }

 private:
  void compose_increment(const VecX& delta) {
    NavState& nav = state_.nav;
    nav.q_rb = (nav.q_rb * Quat(so3_exp(delta.segment<3>(0)))).normalized();
    nav.p += delta.segment<3>(3);
    nav.v += delta.segment<3>(6);
    nav.bg += delta.segment<3>(9);
    nav.ba += delta.segment<3>(12);
    for (size_t c = 0; c < nav.clones.size(); ++c) {
      const int col = nav.clone_col(int(c));
      nav.clones[c].q =
          (nav.clones[c].q * Quat(so3_exp(delta.segment<3>(col)))).normalized();
      nav.clones[c].p += delta.segment<3>(col + 3);
    }
    for (size_t j = 0; j < nav.landmarks.size(); ++j) {
      nav.landmarks[j].x += delta.segment<3>(nav.landmark_col(int(j)));
    }
  }

  /// Re-expresses the whole state relative to the newest clone and rotates
  /// the affected error-state columns (positions, velocity, landmarks).
  void reanchor_to_latest_clone() {
    NavState& nav = state_.nav;
    if (nav.clones.empty()) return;
    const NavState::Clone& anchor = nav.clones.back();
    const Pose c(anchor.q, anchor.p);  // new ref in old ref coordinates
    const Mat3 rc = c.rotation_matrix();
    const Pose c_inv = c.inverse();

    auto remap_pose = [&](Quat& q, Vec3& p) {
      const Pose t = c_inv * Pose(q, p);
      q = t.rotation;
      p = t.translation;
    };
    remap_pose(nav.q_rb, nav.p);
    for (auto& clone : nav.clones) remap_pose(clone.q, clone.p);
    nav.v = rc.transpose() * nav.v;
    for (auto& lm : nav.landmarks) lm.x = c_inv * lm.x;
    nav.t_w_ref = nav.t_w_ref * c;
    nav.g_ref = nav.t_w_ref.rotation_matrix().transpose() * kGravity;

    // Column rotation: delta_old = blockdiag(..., R_c, ...) delta_new.
    const int n = nav.dim();
    MatX r = state_.r;
    auto rotate_cols = [&](int col) {
      r.block(0, col, n, 3) = r.block(0, col, n, 3) * rc;
    };
    rotate_cols(3);  // core position
    rotate_cols(6);  // velocity
    for (size_t ci = 0; ci < nav.clones.size(); ++ci) {
      rotate_cols(nav.clone_col(int(ci)) + 3);
    }
    for (size_t j = 0; j < nav.landmarks.size(); ++j) {
      rotate_cols(nav.landmark_col(int(j)));
    }
    Eigen::HouseholderQR<MatX> qr(r);
    state_.r = qr.matrixQR().triangularView<Eigen::Upper>();
    state_.d = qr.householderQ().transpose() * state_.d;
    normalize_sqrt_factor(state_.r, state_.d, cfg_.reg_floor);
  }

  FilterConfig cfg_;
  CameraIntrinsics k_;
  Pose t_bc_;
  SqrtState state_;
  int frame_ = 0;
  double timestamp_ = 0.0;
  double max_oracle_error_ = 0.0;
  std::optional<ImuSample> last_imu_;
};

}  // namespace sgslam
