#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "helpers.hpp"
#include "sgslam/vio/pipeline.hpp"
#include "sgslam/vio/sqrt_filter.hpp"

using namespace sgslam;

namespace {

std::vector<ImuSample> static_window(double t0, double t1, double rate) {
  std::vector<ImuSample> out;
  const int n = int((t1 - t0) * rate);
  for (int i = 0; i <= n; ++i) {
    ImuSample s;
    s.t = t0 + i / rate;
    s.accel = Vec3(0, 0, 9.81);
    s.gyro = Vec3::Zero();
    out.push_back(s);
  }
  return out;
}

MatX random_upper(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  MatX r = MatX::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) r(i, j) = g(rng);
    r(i, i) = 2.0 + std::abs(r(i, i));  // well-conditioned
  }
  return r;
}

FilterConfig test_filter_config() {
  FilterConfig cfg;
  cfg.gyro_noise = 1e-4;
  cfg.accel_noise = 1e-3;
  cfg.gyro_bias_walk = 1e-6;
  cfg.accel_bias_walk = 1e-5;
  return cfg;
}

}  // namespace

TEST_CASE("qr_update leaves the state unchanged for empty measurements") {
  std::mt19937_64 rng(1);
  MatX r = random_upper(8, rng);
  VecX d = VecX::Random(8);
  MatX r0 = r;
  VecX d0 = d;
  MatX a(0, 8);
  VecX b(0);
  const double eps = qr_update(r, d, a, b);
  CHECK(eps == 0.0);
  CHECK(r == r0);
  CHECK(d == d0);
}

TEST_CASE("qr_update toy case matches the regularized normal equations") {
  // Prior R = I2, d = 0; one row A = [1 0], b = 1:
  // (A^T A + I) delta = A^T b  =>  delta = (0.5, 0).
  MatX r = MatX::Identity(2, 2);
  VecX d = VecX::Zero(2);
  MatX a(1, 2);
  a << 1, 0;
  VecX b(1);
  b << 1;
  qr_update(r, d, a, b);
  VecX delta = back_substitute(r, d);
  CHECK(delta[0] == Catch::Approx(0.5).margin(1e-12));
  CHECK(delta[1] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("qr_update equals a dense normal-equations solve on random problems") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 4 + int(rng() % 12);
    const int m = 1 + int(rng() % 20);
    MatX r = random_upper(n, rng);
    VecX d = VecX::Zero(n);
    for (int i = 0; i < n; ++i) d[i] = g(rng);
    MatX a(m, n);
    VecX b(m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) a(i, j) = g(rng);
      b[i] = g(rng);
    }

    const MatX info = r.transpose() * r + a.transpose() * a;
    const VecX rhs = r.transpose() * d + a.transpose() * b;
    const VecX oracle = info.ldlt().solve(rhs);

    qr_update(r, d, a, b);
    VecX delta = back_substitute(r, d);
    CHECK((delta - oracle).norm() / std::max(oracle.norm(), 1e-12) < 1e-8);

    // Factor stays upper triangular.
    for (int i = 1; i < n; ++i) {
      for (int j = 0; j < i; ++j) REQUIRE(r(i, j) == 0.0);
    }
  }
}

TEST_CASE("back_substitute basics") {
  MatX r = MatX::Zero(2, 2);
  r(0, 0) = 2;
  r(1, 1) = 4;
  VecX d(2);
  d << 2, 8;
  VecX x = back_substitute(r, d);
  CHECK(x[0] == 1.0);
  CHECK(x[1] == 2.0);

  VecX zero = back_substitute(r, VecX::Zero(2));
  CHECK(zero.norm() == 0.0);

  r(1, 1) = 0.0;
  CHECK_THROWS_AS(back_substitute(r, d), Error);
}

TEST_CASE("back_substitute residual is tiny on random systems") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 3 + int(rng() % 15);
    MatX r = random_upper(n, rng);
    VecX d(n);
    for (int i = 0; i < n; ++i) d[i] = g(rng);
    VecX x = back_substitute(r, d);
    CHECK((r * x - d).norm() < 1e-10);
  }
}

TEST_CASE("propagate holds still under a static zero-noise stream") {
  FilterConfig cfg = test_filter_config();
  CameraIntrinsics k(120, 120, 79.5, 59.5, 160, 120);
  SqrtFilter filter(cfg, k, body_to_camera(), Vec3::Zero());
  auto imu = static_window(0.0, 1.0, 200.0);
  filter.initialize(0.0, {imu.front()});
  for (int f = 1; f <= 20; ++f) {
    std::vector<ImuSample> window(imu.begin() + 1 + (f - 1) * 10,
                                  imu.begin() + 1 + f * 10);
    filter.propagate(window.back().t, window);
  }
  CHECK(filter.world_pose().translation.norm() < 1e-6);
  CHECK((filter.world_pose().rotation_matrix() - Mat3::Identity()).norm() < 1e-9);
}

TEST_CASE("propagate tracks the simulator ground truth over 10 s") {
  SceneSpec spec = sgslam::testing::two_room_scene();
  NoiseSpec zero;
  SimConfig sim_cfg;
  sim_cfg.duration = 10.0;
  sim_cfg.trajectory.profile = MotionProfile::kFigureEight;
  sim_cfg.trajectory.center = Vec2(3.0, 2.0);
  sim_cfg.trajectory.radius_x = 1.6;
  sim_cfg.trajectory.radius_y = 1.2;
  sim_cfg.trajectory.period = 10.0;
  sim_cfg.n_static_landmarks = 0;  // propagation only
  SimStream s = simulate(spec, zero, sim_cfg);

  FilterConfig cfg = test_filter_config();
  SqrtFilter filter(cfg, sim_cfg.intrinsics, body_to_camera(),
                    s.initial_velocity);
  filter.initialize(0.0, s.packets.front().imu_window);
  double max_err = 0.0;
  for (size_t f = 1; f < s.packets.size(); ++f) {
    filter.propagate(s.packets[f].timestamp, s.packets[f].imu_window);
    max_err = std::max(max_err, (filter.world_pose().translation -
                                 s.packets[f].gt_pose.translation)
                                    .norm());
  }
  CHECK(max_err < 1e-3);
}

TEST_CASE("pose covariance grows under propagation") {
  FilterConfig cfg = test_filter_config();
  CameraIntrinsics k(120, 120, 79.5, 59.5, 160, 120);
  SqrtFilter filter(cfg, k, body_to_camera(), Vec3::Zero());
  auto imu = static_window(0.0, 1.0, 200.0);
  filter.initialize(0.0, {imu.front()});
  double last_trace = filter.emit_odometry().cov_diag.sum();
  for (int f = 1; f <= 10; ++f) {
    std::vector<ImuSample> window(imu.begin() + 1 + (f - 1) * 10,
                                  imu.begin() + 1 + f * 10);
    filter.propagate(window.back().t, window);
    const double trace = filter.emit_odometry().cov_diag.sum();
    CHECK(trace >= last_trace - 1e-12);
    last_trace = trace;
  }
}

TEST_CASE("stack_residuals omits masked observations") {
  FilterConfig cfg = test_filter_config();
  CameraIntrinsics k(120, 120, 79.5, 59.5, 160, 120);
  SqrtFilter filter(cfg, k, body_to_camera(), Vec3::Zero());
  filter.initialize(0.0);
  filter.add_landmark(7, Vec3(2.0, 0.3, 0.1));

  const Pose t_rc = *filter.ref_camera_pose(0);
  const Vec2 px = project(t_rc.inverse() * *filter.landmark_ref(7), k).first;
  VisualObservation masked{7, 0, px + Vec2(1.0, 0.0), 0.0};
  VisualObservation active{7, 0, px + Vec2(1.0, 0.0), 1.0};

  auto none = filter.stack_residuals({masked}, {});
  CHECK(none.rows == 0);
  auto one = filter.stack_residuals({active}, {});
  CHECK(one.rows == 2);
}

TEST_CASE("depth factor whitening hand case") {
  FilterConfig cfg = test_filter_config();
  cfg.gates.lambda_d = 1.0;
  CameraIntrinsics k(120, 120, 79.5, 59.5, 160, 120);
  SqrtFilter filter(cfg, k, body_to_camera(), Vec3::Zero());
  filter.initialize(0.0);
  // Landmark at camera depth 1.9 straight ahead.
  const Pose t_rc = *filter.ref_camera_pose(0);
  filter.add_landmark(3, t_rc * Vec3(0.0, 0.0, 1.9));

  DepthCandidate f;
  f.track_id = 3;
  f.pixel = Vec2(79.5, 59.5);
  f.z = 2.0;
  f.sigma_d = 0.1;
  f.weight = 1;
  auto stack = filter.stack_residuals({}, {f});
  REQUIRE(stack.rows == 1);
  CHECK(stack.b[0] == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("stacked residual equals the sum of per-factor residuals") {
  FilterConfig cfg = test_filter_config();
  CameraIntrinsics k(120, 120, 79.5, 59.5, 160, 120);
  SqrtFilter filter(cfg, k, body_to_camera(), Vec3::Zero());
  filter.initialize(0.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  std::vector<VisualObservation> obs;
  std::vector<DepthCandidate> factors;
  for (int i = 0; i < 6; ++i) {
    const Vec3 x_ref =
        *filter.ref_camera_pose(0) * Vec3(u(rng), u(rng), 2.0 + u(rng));
    filter.add_landmark(i, x_ref);
    const Vec2 px =
        project((*filter.ref_camera_pose(0)).inverse() * x_ref, k).first;
    obs.push_back({i, 0, px + Vec2(u(rng), u(rng)), 1.0});
    DepthCandidate f;
    f.track_id = i;
    f.pixel = px;
    f.z = 2.0 + u(rng);
    f.sigma_d = 0.1;
    f.weight = 1;
    factors.push_back(f);
  }
  auto full = filter.stack_residuals(obs, factors);
  const VecX delta = VecX::Random(full.a.cols()) * 0.01;
  const double whole = (full.a * delta - full.b).squaredNorm();
  double parts = 0.0;
  for (int i = 0; i < 6; ++i) {
    auto sv = filter.stack_residuals({obs[size_t(i)]}, {});
    auto sd = filter.stack_residuals({}, {factors[size_t(i)]});
    parts += (sv.a * delta - sv.b).squaredNorm();
    parts += (sd.a * delta - sd.b).squaredNorm();
  }
  CHECK(whole == Catch::Approx(parts).epsilon(1e-12));
}

TEST_CASE("measurement jacobians match finite differences") {
  FilterConfig cfg = test_filter_config();
  CameraIntrinsics k(120, 120, 79.5, 59.5, 160, 120);
  SqrtFilter filter(cfg, k, body_to_camera(), Vec3::Zero());
  filter.initialize(0.0);
  const Vec3 x_ref = *filter.ref_camera_pose(0) * Vec3(0.2, -0.1, 2.4);
  filter.add_landmark(5, x_ref);
  const Vec2 px = project((*filter.ref_camera_pose(0)).inverse() * x_ref, k).first;
  VisualObservation obs{5, 0, px + Vec2(0.7, -0.4), 1.0};
  auto stack = filter.stack_residuals({obs}, {});
  REQUIRE(stack.rows == 2);

  const double h = 1e-7;
  const int n = filter.state().nav.dim();
  for (int dim : {0, 1, 2, 3, 4, 5, n - 3, n - 2, n - 1}) {
    auto probe = [&](double sign) {
      SqrtFilter f2 = filter;
      VecX delta = VecX::Zero(n);
      delta[dim] = sign * h;
      auto& nav = f2.mutable_state().nav;
      nav.q_rb = (nav.q_rb * Quat(so3_exp(delta.segment<3>(0)))).normalized();
      nav.p += delta.segment<3>(3);
      nav.landmarks[0].x += delta.segment<3>(n - 3);
      auto s = f2.stack_residuals({obs}, {});
      return VecX(s.b);
    };
    const VecX plus = probe(1.0);
    const VecX minus = probe(-1.0);
    // b = scale*(z - h(x)), so db/dx = -scale*dh/dx = -A column.
    const VecX fd = (plus - minus) / (2 * h);
    const VecX analytic = -stack.a.col(dim).head(2);
    CHECK((fd - analytic).norm() < 1e-4 * std::max(1.0, analytic.norm()));
  }
}

TEST_CASE("full vio run on a noise-free stream stays within 1e-3 m") {
  SceneSpec spec = sgslam::testing::two_room_scene();
  NoiseSpec zero;
  SimConfig sim_cfg;
  sim_cfg.duration = 10.0;
  sim_cfg.trajectory.profile = MotionProfile::kFigureEight;
  sim_cfg.trajectory.center = Vec2(3.0, 2.0);
  sim_cfg.trajectory.radius_x = 1.6;
  sim_cfg.trajectory.radius_y = 1.2;
  sim_cfg.trajectory.period = 14.0;
  SimStream s = simulate(spec, zero, sim_cfg);

  VioConfig cfg;
  cfg.filter = test_filter_config();
  cfg.filter.oracle_check = true;
  VioPipeline vio(cfg, sim_cfg.intrinsics, body_to_camera(),
                  s.initial_velocity, s.scene.dynamic_label_ids());
  double max_err = 0.0;
  double last_t = -1.0;
  for (const auto& pkt : s.packets) {
    OdometrySample odom = vio.process(pkt, pkt.depth, pkt.labels);
    CHECK(odom.timestamp > last_t);
    last_t = odom.timestamp;
    max_err = std::max(
        max_err, (odom.pose.translation - pkt.gt_pose.translation).norm());
  }
  CHECK(vio.odometry().front().pose.translation.norm() < 1e-12);
  CHECK(max_err < 1e-3);
  // The QR path agrees with the dense oracle on every update of the run.
  CHECK(vio.filter().max_oracle_error() < 1e-8);
  // R keeps a regularized nonnegative diagonal.
  const MatX& r = vio.filter().state().r;
  for (int i = 0; i < r.rows(); ++i) {
    CHECK(r(i, i) >= cfg.filter.reg_floor * (1.0 - 1e-12));
  }
}
