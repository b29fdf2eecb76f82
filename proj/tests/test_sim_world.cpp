#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>

#include "helpers.hpp"
#include "sgslam/io/packet_io.hpp"
#include "sgslam/sim/simulator.hpp"

using namespace sgslam;
using sgslam::testing::one_room_scene;
using sgslam::testing::two_room_scene;

namespace {

// Independent slab intersection used as the rendering oracle; written as
// interval arithmetic per axis rather than the incremental form.
double oracle_ray_box(const Vec3& o, const Vec3& d, const AABox& b) {
  double lo = -1e30, hi = 1e30;
  for (int i = 0; i < 3; ++i) {
    if (d[i] == 0.0) {
      if (o[i] < b.min[i] || o[i] > b.max[i]) return 1e30;
    } else {
      const double a0 = (b.min[i] - o[i]) / d[i];
      const double a1 = (b.max[i] - o[i]) / d[i];
      lo = std::max(lo, std::min(a0, a1));
      hi = std::min(hi, std::max(a0, a1));
    }
  }
  if (lo > hi || hi < 0 || lo <= 1e-9) return 1e30;
  return lo;
}

}  // namespace

TEST_CASE("trajectory: duration zero yields a single origin pose") {
  SceneSpec spec = one_room_scene();
  TrajectoryParams params;
  params.profile = MotionProfile::kLine;
  params.center = Vec2(1.0, 2.0);  // re-expressed to origin anyway
  auto traj = generate_trajectory(spec, params, 0.0, 100.0);
  REQUIRE(traj.size() == 1);
  CHECK(traj[0].pose.translation.norm() < 1e-12);
  CHECK((traj[0].pose.rotation_matrix() - Mat3::Identity()).norm() < 1e-12);
}

TEST_CASE("trajectory: constant-velocity line reaches (1,0,0) at 1 s") {
  SceneSpec spec = one_room_scene();
  TrajectoryParams params;
  params.profile = MotionProfile::kLine;
  params.line_velocity = Vec3(1.0, 0.0, 0.0);
  params.center = Vec2(1.0, 2.0);
  params.height = 1.4;
  auto traj = generate_trajectory(spec, params, 2.0, 100.0);
  const auto& s = traj[100];  // t = 1
  CHECK(std::abs(s.t - 1.0) < 1e-12);
  CHECK((s.pose.translation - Vec3(1, 0, 0)).norm() < 1e-12);
  CHECK((s.velocity - Vec3(1, 0, 0)).norm() < 1e-12);
}

TEST_CASE("trajectory: closed loops return to the start") {
  SceneSpec spec = two_room_scene();
  TrajectoryParams params;
  params.profile = MotionProfile::kFigureEight;
  params.center = Vec2(3.0, 2.0);
  params.radius_x = 1.6;
  params.radius_y = 1.2;
  params.period = 10.0;
  auto traj = generate_trajectory(spec, params, 10.0, 100.0);
  CHECK((traj.back().pose.translation - traj.front().pose.translation).norm() <
        1e-6);

  params.profile = MotionProfile::kCorridorLoop;
  params.radius_x = 1.8;
  params.radius_y = 1.1;
  auto loop = generate_trajectory(spec, params, 10.0, 100.0);
  CHECK((loop.back().pose.translation - loop.front().pose.translation).norm() <
        1e-6);
}

TEST_CASE("trajectory: velocity/accel agree with finite differences") {
  SceneSpec spec = one_room_scene();
  TrajectoryParams params;
  params.profile = MotionProfile::kRoomScan;
  params.period = 12.0;
  auto traj = generate_trajectory(spec, params, 12.0, 400.0);
  const double dt = 1.0 / 400.0;
  for (size_t i = 1; i + 1 < traj.size(); i += 37) {
    const Vec3 fd_v =
        (traj[i + 1].pose.translation - traj[i - 1].pose.translation) / (2 * dt);
    const Vec3 fd_a = (traj[i + 1].pose.translation -
                       2 * traj[i].pose.translation +
                       traj[i - 1].pose.translation) /
                      (dt * dt);
    CHECK((fd_v - traj[i].velocity).norm() < 1e-3);
    CHECK((fd_a - traj[i].accel).norm() < 2e-2);
  }
}

TEST_CASE("trajectory: leaving free space is an error") {
  SceneSpec spec = one_room_scene();
  TrajectoryParams params;
  params.profile = MotionProfile::kLine;
  params.line_velocity = Vec3(2.0, 0.0, 0.0);
  params.center = Vec2(1.0, 2.0);
  CHECK_THROWS_AS(generate_trajectory(spec, params, 5.0, 50.0), Error);
}

TEST_CASE("imu: static hover reads gravity only") {
  std::vector<TrajectorySample> traj;
  for (int i = 0; i <= 100; ++i) {
    TrajectorySample s;
    s.t = i * 0.01;
    traj.push_back(s);
  }
  NoiseSpec zero;
  auto imu = synthesize_imu(traj, zero);
  for (const auto& m : imu) {
    CHECK((m.accel - Vec3(0, 0, 9.81)).norm() < 1e-12);
    CHECK(m.gyro.norm() < 1e-12);
  }
}

TEST_CASE("imu: circular motion has centripetal magnitude v^2/r") {
  const double r = 2.0, speed = 1.2;
  const double w = speed / r;
  std::vector<TrajectorySample> traj;
  for (int i = 0; i <= 200; ++i) {
    const double t = i * 0.01;
    TrajectorySample s;
    s.t = t;
    const double th = w * t;
    s.pose = Pose(Quat(Eigen::AngleAxisd(th + M_PI / 2, Vec3::UnitZ())),
                  Vec3(r * std::cos(th), r * std::sin(th), 1.0));
    s.velocity = Vec3(-r * w * std::sin(th), r * w * std::cos(th), 0);
    s.accel = Vec3(-r * w * w * std::cos(th), -r * w * w * std::sin(th), 0);
    s.angular_velocity = s.pose.rotation_matrix().transpose() * Vec3(0, 0, w);
    traj.push_back(s);
  }
  NoiseSpec zero;
  auto imu = synthesize_imu(traj, zero);
  for (const auto& m : imu) {
    const Vec3 horizontal(m.accel.x(), m.accel.y(), 0.0);
    CHECK(std::abs(horizontal.norm() - speed * speed / r) < 1e-6);
    CHECK(std::abs(m.accel.z() - 9.81) < 1e-9);
  }
}

TEST_CASE("imu: identical seeds give identical streams") {
  SceneSpec spec = one_room_scene();
  TrajectoryParams params;
  params.profile = MotionProfile::kFigureEight;
  params.center = Vec2(3.0, 2.0);
  params.radius_x = 1.5;
  params.radius_y = 1.0;
  auto traj = generate_trajectory(spec, params, 3.0, 200.0);
  NoiseSpec noise;
  noise.gyro_noise = 1e-3;
  noise.accel_noise = 1e-2;
  noise.gyro_bias_walk = 1e-4;
  noise.accel_bias_walk = 1e-3;
  noise.seed = 99;
  auto a = synthesize_imu(traj, noise);
  auto b = synthesize_imu(traj, noise);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].gyro == b[i].gyro);
    CHECK(a[i].accel == b[i].accel);
  }
}

TEST_CASE("imu: double integration reproduces the trajectory within 1e-3 m") {
  SceneSpec spec = two_room_scene();
  TrajectoryParams params;
  params.profile = MotionProfile::kFigureEight;
  params.center = Vec2(3.0, 2.0);
  params.radius_x = 1.6;
  params.radius_y = 1.2;
  params.period = 10.0;
  auto traj = generate_trajectory(spec, params, 10.0, 200.0);
  NoiseSpec zero;
  auto imu = synthesize_imu(traj, zero);

  StrapdownState x;
  x.orientation = traj.front().pose.rotation;
  x.position = traj.front().pose.translation;
  x.velocity = traj.front().velocity;
  double max_err = 0.0;
  for (size_t i = 1; i < imu.size(); ++i) {
    x = strapdown_step(x, imu[i - 1], imu[i]);
    max_err = std::max(max_err, (x.position - traj[i].pose.translation).norm());
  }
  CHECK(max_err < 1e-3);
}

TEST_CASE("render: noise-free frontal wall depth is exact") {
  SceneSpec spec = one_room_scene();
  World world = build_world(spec);
  // Wall plane at x = 6, inner face at 5.95; camera 3 m back at x = 2.95.
  CameraIntrinsics k(120, 120, 80, 60, 160, 120);
  Pose body(Quat::Identity(), Vec3(2.95, 2.0, 1.4), "body", "world");
  Pose t_wc = body * body_to_camera();
  NoiseSpec zero;
  auto out = render_perception(world, spec, 0.0, t_wc, k, zero, 0);
  CHECK(double(out.depth.at(80, 60)) == 3.0);
  CHECK(out.labels.at(80, 60) == spec.label_id("wall"));
}

TEST_CASE("render: matches an independent intersection oracle everywhere") {
  SceneSpec spec = two_room_scene();
  World world = build_world(spec);
  CameraIntrinsics k(90, 90, 59.5, 44.5, 120, 90);
  Pose body(Quat(Eigen::AngleAxisd(0.4, Vec3::UnitZ())), Vec3(2.2, 1.6, 1.3),
            "body", "world");
  Pose t_wc = body * body_to_camera();
  NoiseSpec zero;
  auto out = render_perception(world, spec, 0.0, t_wc, k, zero, 0);
  const Mat3 r_wc = t_wc.rotation_matrix();
  int valid = 0;
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      const Vec3 dir = r_wc * pixel_ray(Vec2(x, y), k);
      double best = 1e30;
      for (const auto& wb : world.boxes) {
        best = std::min(best, oracle_ray_box(t_wc.translation, dir, wb.box));
      }
      if (best < 30.0) {
        ++valid;
        REQUIRE(double(out.depth.at(x, y)) == Catch::Approx(best).margin(0));
      } else {
        REQUIRE(out.depth.at(x, y) == kInvalidDepth);
      }
    }
  }
  CHECK(valid > 1000);
}

TEST_CASE("render: dynamic agents are labeled with their class") {
  SceneSpec spec = one_room_scene();
  sgslam::testing::add_agent(spec, 0.0001);
  World world = build_world(spec);
  CameraIntrinsics k(120, 120, 80, 60, 160, 120);
  // Look straight at the agent's starting waypoint (2, 0.9).
  Pose body(Quat(Eigen::AngleAxisd(-M_PI / 2, Vec3::UnitZ())),
            Vec3(2.0, 2.9, 1.0), "body", "world");
  Pose t_wc = body * body_to_camera();
  NoiseSpec zero;
  auto out = render_perception(world, spec, 0.0, t_wc, k, zero, 0);
  CHECK(out.labels.at(80, 60) == spec.label_id("person"));
}

TEST_CASE("render: noise-free renders are bit-identical") {
  SceneSpec spec = one_room_scene();
  World world = build_world(spec);
  CameraIntrinsics k(120, 120, 79.5, 59.5, 160, 120);
  Pose body(Quat::Identity(), Vec3(1.0, 2.0, 1.4), "body", "world");
  Pose t_wc = body * body_to_camera();
  NoiseSpec zero;
  auto a = render_perception(world, spec, 0.0, t_wc, k, zero, 0);
  auto b = render_perception(world, spec, 0.0, t_wc, k, zero, 0);
  CHECK(a.depth.data == b.depth.data);
  CHECK(a.labels.data == b.labels.data);
}

TEST_CASE("keypoints: noise-free observations project exactly") {
  SceneSpec spec = one_room_scene();
  World world = build_world(spec);
  CameraIntrinsics k(120, 120, 79.5, 59.5, 160, 120);
  auto landmarks = sample_landmarks(world, spec, 200, 0, 7);
  Pose body(Quat::Identity(), Vec3(1.0, 2.0, 1.4), "body", "world");
  Pose t_wc = body * body_to_camera();
  NoiseSpec zero;
  auto obs = observe_keypoints(world, spec, landmarks, 0.0, t_wc, k, zero, 0);
  REQUIRE(obs.size() > 10);
  for (const auto& o : obs) {
    const Landmark& lm = landmarks[size_t(o.landmark_id)];
    auto [px, depth] = project(t_wc.inverse() * lm.position, k);
    CHECK((px - o.pixel).norm() < 1e-12);
  }
}

TEST_CASE("keypoints: landmarks behind the camera are absent") {
  SceneSpec spec = one_room_scene();
  World world = build_world(spec);
  CameraIntrinsics k(120, 120, 79.5, 59.5, 160, 120);
  std::vector<Landmark> landmarks(1);
  landmarks[0].id = 0;
  landmarks[0].position = Vec3(0.5, 2.0, 1.0);  // behind a camera at x=1
  landmarks[0].descriptor = VecX::Ones(kDescriptorDim).normalized();
  Pose body(Quat::Identity(), Vec3(1.0, 2.0, 1.4), "body", "world");
  NoiseSpec zero;
  auto obs = observe_keypoints(world, spec, landmarks, 0.0,
                               body * body_to_camera(), k, zero, 0);
  CHECK(obs.empty());
}

TEST_CASE("keypoints: occluded landmarks are absent") {
  SceneSpec spec = one_room_scene();
  World world = build_world(spec);
  CameraIntrinsics k(120, 120, 79.5, 59.5, 160, 120);
  std::vector<Landmark> landmarks(1);
  landmarks[0].id = 0;
  // Past the chair (chair spans x in [1.0,1.5], y in [0.8,1.3], z to 0.9).
  landmarks[0].position = Vec3(3.0, 1.05, 0.5);
  landmarks[0].descriptor = VecX::Ones(kDescriptorDim).normalized();
  Pose clear_view(Quat::Identity(), Vec3(2.0, 1.05, 0.5), "body", "world");
  Pose blocked_view(Quat::Identity(), Vec3(0.2, 1.05, 0.5), "body", "world");
  NoiseSpec zero;
  auto visible = observe_keypoints(world, spec, landmarks, 0.0,
                                   clear_view * body_to_camera(), k, zero, 0);
  auto hidden = observe_keypoints(world, spec, landmarks, 0.0,
                                  blocked_view * body_to_camera(), k, zero, 0);
  CHECK(visible.size() == 1);
  CHECK(hidden.empty());
}

TEST_CASE("reference graph: one room, one chair") {
  SceneSpec spec;
  RoomSpec r;
  r.id = 0;
  r.min = Vec2(0, 0);
  r.max = Vec2(4, 3);
  spec.rooms.push_back(r);
  ObjectSpec chair;
  chair.cls = "chair";
  chair.room_id = 0;
  chair.box = AABox(Vec3(1, 1, 0), Vec3(1.5, 1.5, 0.9));
  spec.objects.push_back(chair);
  spec.finalize_labels();

  SceneGraph g = reference_scene_graph(spec);
  CHECK(g.layer_nodes(GraphLayer::kBuilding).size() == 1);
  CHECK(g.layer_nodes(GraphLayer::kRoom).size() == 1);
  auto objs = g.layer_nodes(GraphLayer::kObject);
  REQUIRE(objs.size() == 1);
  CHECK((objs[0]->centroid - chair.box.center()).norm() < 1e-12);

  bool obj_room = false, room_building = false;
  for (const auto& e : g.edges) {
    if (e.relation != Relation::kContains) continue;
    const auto* src = g.node_by_id(e.src);
    const auto* dst = g.node_by_id(e.dst);
    if (src->layer == GraphLayer::kObject && dst->layer == GraphLayer::kRoom) {
      obj_room = true;
    }
    if (src->layer == GraphLayer::kRoom && dst->layer == GraphLayer::kBuilding) {
      room_building = true;
    }
  }
  CHECK(obj_room);
  CHECK(room_building);
}

TEST_CASE("reference graph: adjacency and supports edges") {
  SceneSpec spec = two_room_scene();
  SceneGraph g = reference_scene_graph(spec);
  int adjacency = 0, supports = 0;
  for (const auto& e : g.edges) {
    adjacency += e.relation == Relation::kAdjacent;
    supports += e.relation == Relation::kSupports;
  }
  CHECK(adjacency == 1);
  CHECK(supports == 1);  // monitor on table
  CHECK(g.layer_nodes(GraphLayer::kPlace).size() > 5);
}

TEST_CASE("simulate: deterministic packets and io round trip") {
  SceneSpec spec = two_room_scene();
  NoiseSpec noise;
  noise.depth_sigma0 = 0.01;
  noise.depth_sigma1 = 0.01;
  noise.label_flip_prob = 0.01;
  noise.flicker_amplitude = 0.05;
  noise.pixel_noise = 0.3;
  noise.descriptor_noise = 0.02;
  noise.gyro_noise = 1e-3;
  noise.accel_noise = 5e-3;
  noise.seed = 12345;

  SimConfig cfg;
  cfg.intrinsics = CameraIntrinsics(100, 100, 59.5, 44.5, 120, 90);
  cfg.duration = 1.0;
  cfg.trajectory.profile = MotionProfile::kFigureEight;
  cfg.trajectory.center = Vec2(3.0, 2.0);
  cfg.trajectory.radius_x = 1.5;
  cfg.trajectory.radius_y = 1.0;
  cfg.trajectory.period = 10.0;
  cfg.n_static_landmarks = 150;

  SimStream a = simulate(spec, noise, cfg);
  SimStream b = simulate(spec, noise, cfg);
  REQUIRE(a.packets.size() == b.packets.size());
  REQUIRE(a.packets.size() == 21);  // duration 1 s at 20 Hz, inclusive
  for (size_t i = 0; i < a.packets.size(); ++i) {
    CHECK(a.packets[i].depth.data == b.packets[i].depth.data);
    CHECK(a.packets[i].labels.data == b.packets[i].labels.data);
    REQUIRE(a.packets[i].keypoints.size() == b.packets[i].keypoints.size());
    for (size_t j = 0; j < a.packets[i].keypoints.size(); ++j) {
      CHECK(a.packets[i].keypoints[j].pixel == b.packets[i].keypoints[j].pixel);
      CHECK(a.packets[i].keypoints[j].descriptor ==
            b.packets[i].keypoints[j].descriptor);
    }
  }

  namespace fs = std::filesystem;
  const std::string dir = fs::temp_directory_path() / "sgslam_pkt_test";
  fs::remove_all(dir);
  write_stream(dir, a);
  FramePacket back = read_packet(dir + "/" + packet_filename(3));
  CHECK(back.timestamp == a.packets[3].timestamp);
  CHECK(back.depth.data == a.packets[3].depth.data);
  CHECK(back.labels.data == a.packets[3].labels.data);
  REQUIRE(back.keypoints.size() == a.packets[3].keypoints.size());
  CHECK(back.imu_window.size() == a.packets[3].imu_window.size());
  CHECK((back.gt_pose.translation - a.packets[3].gt_pose.translation).norm() ==
        0.0);

  StreamMeta meta = read_stream_meta(dir);
  CHECK(meta.frame_count == a.packets.size());
  CHECK(meta.intrinsics.width == 120);
  CHECK((meta.initial_velocity - a.initial_velocity).norm() == 0.0);
  fs::remove_all(dir);
}

TEST_CASE("simulate: imu windows span (previous, current] frame times") {
  SceneSpec spec = one_room_scene();
  NoiseSpec zero;
  SimConfig cfg;
  cfg.duration = 0.5;
  cfg.trajectory.profile = MotionProfile::kRoomScan;
  cfg.trajectory.period = 12.0;
  SimStream s = simulate(spec, zero, cfg);
  CHECK(s.packets.front().imu_window.size() == 1);
  for (size_t i = 1; i < s.packets.size(); ++i) {
    const auto& w = s.packets[i].imu_window;
    REQUIRE(w.size() == 10);  // 200 Hz / 20 Hz
    CHECK(w.front().t > s.packets[i - 1].timestamp);
    CHECK(std::abs(w.back().t - s.packets[i].timestamp) < 1e-12);
    for (size_t j = 1; j < w.size(); ++j) CHECK(w[j].t > w[j - 1].t);
  }
}
