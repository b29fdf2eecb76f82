#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "helpers.hpp"
#include "sgslam/vio/frontend.hpp"

using namespace sgslam;

namespace {

KeypointObs make_obs(int64_t id, const VecX& desc, const Vec2& px = Vec2::Zero()) {
  KeypointObs o;
  o.landmark_id = id;
  o.descriptor = desc;
  o.pixel = px;
  return o;
}

VecX unit(std::initializer_list<double> v) {
  VecX d(int(v.size()));
  int i = 0;
  for (double x : v) d[i++] = x;
  d.normalize();
  return d;
}

}  // namespace

TEST_CASE("ratio test accepts distinct matches and rejects ambiguous ones") {
  // Target descriptor plus a decoy; distances tuned per case.
  VecX q = unit({1, 0, 0, 0});

  SECTION("best 0.1 vs second 0.5 at threshold 0.7 is accepted") {
    std::vector<KeypointObs> prev{make_obs(0, q)};
    // cos distances: |q - a| = 0.1, |q - b| = 0.5 approximately via rotation
    VecX a = (q + 0.1 * unit({0, 1, 0, 0})).normalized();
    VecX b = (q + 0.56 * unit({0, 0, 1, 0})).normalized();
    std::vector<KeypointObs> curr{make_obs(10, a), make_obs(11, b)};
    auto matches = match_frames(prev, curr, 0.7);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].curr_index == 0);
  }

  SECTION("best 0.4 vs second 0.5 is rejected (ratio 0.8)") {
    std::vector<KeypointObs> prev{make_obs(0, q)};
    VecX a = (q + 0.43 * unit({0, 1, 0, 0})).normalized();
    VecX b = (q + 0.56 * unit({0, 0, 1, 0})).normalized();
    const double da = (q - a).norm(), db = (q - b).norm();
    REQUIRE(da / db > 0.7);
    std::vector<KeypointObs> curr{make_obs(10, a), make_obs(11, b)};
    auto matches = match_frames(prev, curr, 0.7);
    CHECK(matches.empty());
  }
}

TEST_CASE("matching is one-to-one and mutual") {
  std::mt19937_64 rng(4);
  std::vector<KeypointObs> prev, curr;
  for (int i = 0; i < 20; ++i) {
    VecX d = random_unit_descriptor(rng);
    prev.push_back(make_obs(i, d));
    curr.push_back(make_obs(100 + i, d));
  }
  auto matches = match_frames(prev, curr, 0.8);
  CHECK(matches.size() == 20);
  std::set<int> used_prev, used_curr;
  for (const auto& m : matches) {
    CHECK(used_prev.insert(m.prev_index).second);
    CHECK(used_curr.insert(m.curr_index).second);
    CHECK(prev[m.prev_index].landmark_id + 100 == curr[m.curr_index].landmark_id);
  }
}

TEST_CASE("matching is symmetric under swapping the frames") {
  std::mt19937_64 rng(9);
  std::vector<KeypointObs> a, b;
  for (int i = 0; i < 30; ++i) {
    a.push_back(make_obs(i, random_unit_descriptor(rng)));
  }
  for (int i = 0; i < 25; ++i) {
    VecX d = (a[size_t(i)].descriptor + 0.05 * random_unit_descriptor(rng))
                 .normalized();
    b.push_back(make_obs(1000 + i, d));
  }
  auto ab = match_frames(a, b, 0.75);
  auto ba = match_frames(b, a, 0.75);
  REQUIRE(ab.size() == ba.size());
  std::set<std::pair<int, int>> sab, sba;
  for (const auto& m : ab) sab.insert({m.prev_index, m.curr_index});
  for (const auto& m : ba) sba.insert({m.curr_index, m.prev_index});
  CHECK(sab == sba);
}

TEST_CASE("noise-free simulator descriptors match by identity exactly") {
  SceneSpec spec = sgslam::testing::two_room_scene();
  NoiseSpec zero;
  SimConfig cfg;
  cfg.duration = 0.5;
  cfg.trajectory.profile = MotionProfile::kFigureEight;
  cfg.trajectory.center = Vec2(3.0, 2.0);
  cfg.trajectory.radius_x = 1.5;
  cfg.trajectory.radius_y = 1.0;
  cfg.trajectory.period = 12.0;
  SimStream s = simulate(spec, zero, cfg);
  int total = 0;
  for (size_t f = 1; f < s.packets.size(); ++f) {
    auto matches = match_frames(s.packets[f - 1].keypoints,
                                s.packets[f].keypoints, 0.7);
    for (const auto& m : matches) {
      ++total;
      REQUIRE(s.packets[f - 1].keypoints[m.prev_index].landmark_id ==
              s.packets[f].keypoints[m.curr_index].landmark_id);
    }
  }
  CHECK(total > 100);
}

TEST_CASE("semantic weight is 0 on dynamic classes, 1 otherwise") {
  LabelMap labels(8, 6, 2);   // class 2 = "wall", say
  labels.at(3, 2) = 5;        // class 5 = "person"
  std::vector<uint16_t> dyn{5};
  CHECK(semantic_weight(Vec2(3, 2), labels, dyn) == 0);
  CHECK(semantic_weight(Vec2(1, 1), labels, dyn) == 1);
  CHECK(semantic_weight(Vec2(3, 2), labels, {}) == 1);  // empty dynamic set
  CHECK_THROWS_AS(semantic_weight(Vec2(100, 2), labels, dyn), Error);
}

namespace {

std::vector<TrackedKeypoint> grid_keypoints(int n) {
  std::vector<TrackedKeypoint> out;
  for (int i = 0; i < n; ++i) {
    TrackedKeypoint kp;
    kp.track_id = i;
    kp.pixel = Vec2(5 + (i % 8) * 4, 5 + (i / 8) * 4);
    kp.has_landmark = true;
    out.push_back(kp);
  }
  return out;
}

}  // namespace

TEST_CASE("depth candidate stride keeps every s_d-th survivor") {
  DepthMap depth(64, 48, 2.0f);
  GateConfig cfg;
  cfg.s_d = 3;
  auto kept = select_depth_candidates(grid_keypoints(9), depth, 0.1, cfg);
  CHECK(kept.size() == 3);
}

TEST_CASE("fast rotation disables all depth factors") {
  DepthMap depth(64, 48, 2.0f);
  GateConfig cfg;
  auto kept = select_depth_candidates(grid_keypoints(9), depth,
                                      cfg.tau_omega + 0.01, cfg);
  CHECK(kept.empty());
}

TEST_CASE("sigma_d follows the linear noise model") {
  GateConfig cfg;
  cfg.sigma0 = 0.05;
  cfg.sigma1 = 0.02;
  CHECK(depth_noise_sigma(2.0, cfg) == Catch::Approx(0.09).margin(1e-12));

  DepthMap depth(64, 48, 2.0f);
  cfg.s_d = 1;
  auto kept = select_depth_candidates(grid_keypoints(4), depth, 0.1, cfg);
  REQUIRE(!kept.empty());
  for (const auto& c : kept) {
    CHECK(c.z == 2.0);
    CHECK(c.sigma_d == Catch::Approx(0.09).margin(1e-12));
    CHECK(c.weight == 1);
  }
}

TEST_CASE("selection drops masked, outlier, and invalid-depth keypoints") {
  DepthMap depth(64, 48, 2.0f);
  depth.at(5, 5) = kInvalidDepth;
  GateConfig cfg;
  cfg.s_d = 1;
  auto kps = grid_keypoints(6);
  kps[1].semantic_weight = 0;              // masked
  kps[2].reprojection_residual = 5.0;      // beyond tau_pi = 2
  // kps[0] sits on the invalidated pixel (5,5).
  auto kept = select_depth_candidates(kps, depth, 0.1, cfg);
  CHECK(kept.size() == 3);
  for (const auto& c : kept) {
    CHECK(c.track_id != 0);
    CHECK(c.track_id != 1);
    CHECK(c.track_id != 2);
  }
}

TEST_CASE("selection keeps row-major image order before striding") {
  DepthMap depth(64, 48, 2.0f);
  GateConfig cfg;
  cfg.s_d = 2;
  std::vector<TrackedKeypoint> kps;
  // Deliberately shuffled insertion order.
  for (int i : {5, 1, 4, 0, 3, 2}) {
    TrackedKeypoint kp;
    kp.track_id = i;
    kp.pixel = Vec2(10 + i * 5, 7);
    kp.has_landmark = true;
    kps.push_back(kp);
  }
  auto kept = select_depth_candidates(kps, depth, 0.1, cfg);
  REQUIRE(kept.size() == 3);
  CHECK(kept[0].track_id == 0);
  CHECK(kept[1].track_id == 2);
  CHECK(kept[2].track_id == 4);
}

TEST_CASE("huber branches and IRLS weights") {
  auto zero = huber(0.0, 1.0);
  CHECK(zero.cost == 0.0);
  CHECK(zero.irls_weight == 1.0);

  const double delta = 0.7;
  auto at_delta = huber(delta, delta);
  CHECK(at_delta.cost == Catch::Approx(0.5 * delta * delta).margin(1e-15));
  // Continuity across the branch point.
  auto just_above = huber(delta + 1e-9, delta);
  CHECK(std::abs(just_above.cost - at_delta.cost) < 1e-8);

  auto two_delta = huber(2.0, 1.0);
  CHECK(two_delta.cost == Catch::Approx(1.5).margin(1e-15));
  CHECK(two_delta.irls_weight == Catch::Approx(0.5).margin(1e-15));

  CHECK_THROWS_AS(huber(1.0, 0.0), Error);
}
