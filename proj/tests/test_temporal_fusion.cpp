#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sgslam/fusion/temporal.hpp"

using namespace sgslam;

namespace {

CameraIntrinsics small_cam() { return CameraIntrinsics(40, 40, 15.5, 11.5, 32, 24); }

}  // namespace

TEST_CASE("identity warp reproduces the source maps") {
  CameraIntrinsics k = small_cam();
  DepthMap depth(32, 24);
  LabelMap labels(32, 24);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  for (size_t i = 0; i < depth.size(); ++i) {
    depth.data[i] = float(u(rng));
    labels.data[i] = uint16_t(i % 5);
  }
  depth.at(3, 3) = kInvalidDepth;

  WarpedFrame w = warp_frame(depth, labels, Pose::identity(), k);
  for (int y = 0; y < 24; ++y) {
    for (int x = 0; x < 32; ++x) {
      if (!depth_valid(depth.at(x, y))) {
        CHECK(w.depth.at(x, y) == kInvalidDepth);
        continue;
      }
      CHECK(w.depth.at(x, y) == depth.at(x, y));
      CHECK(w.labels.at(x, y) == labels.at(x, y));
    }
  }
}

TEST_CASE("z-buffer keeps the nearest sample per target pixel") {
  // Two source pixels collapse onto one target; the nearer one must win.
  CameraIntrinsics k(10, 10, 1.0, 0.0, 3, 1);
  DepthMap depth(3, 1, kInvalidDepth);
  LabelMap labels(3, 1, kInvalidLabel);
  depth.at(0, 0) = 2.0f;
  labels.at(0, 0) = 7;
  depth.at(2, 0) = 3.0f;
  labels.at(2, 0) = 9;
  // Backprojections: (-0.2, 0, 2) and (0.3, 0, 3). Shift so both round to
  // target pixel 1: translation (0.2, 0, 8).
  Pose t(Quat::Identity(), Vec3(0.2, 0.0, 8.0));
  WarpedFrame w = warp_frame(depth, labels, t, k);
  REQUIRE(depth_valid(w.depth.at(1, 0)));
  CHECK(w.depth.at(1, 0) == 10.0f);  // sample from the depth-2 source pixel
  CHECK(w.labels.at(1, 0) == 7);
}

TEST_CASE("forward translation toward a frontal wall shifts its depth") {
  CameraIntrinsics k = small_cam();
  DepthMap depth(32, 24, 3.0f);  // z-depth of a frontal wall is constant
  LabelMap labels(32, 24, 1);
  // Camera advances 0.5 m along its optical axis.
  Pose t_cur_past(Quat::Identity(), Vec3(0, 0, -0.5));
  WarpedFrame w = warp_frame(depth, labels, t_cur_past, k);
  int covered = 0;
  for (int y = 4; y < 20; ++y) {
    for (int x = 6; x < 26; ++x) {
      if (!depth_valid(w.depth.at(x, y))) continue;
      ++covered;
      CHECK(std::abs(double(w.depth.at(x, y)) - 2.5) < 1e-6);
    }
  }
  CHECK(covered > 200);
}

TEST_CASE("temporal gate applies strict depth consistency and class checks") {
  FusionConfig cfg;
  cfg.window = 1;
  cfg.delta_d = 0.15;
  cfg.dynamic_ids = {4};

  WarpedFrame w;
  w.depth = DepthMap(4, 1, 2.0f);
  w.labels = LabelMap(4, 1, 1);
  DepthMap current(4, 1, 2.0f);

  // Exactly delta_d apart -> rejected (strict inequality).
  current.at(0, 0) = 2.0f + 0.15f;
  // Dynamic class -> rejected regardless of agreement.
  w.labels.at(1, 0) = 4;
  // Missing current depth -> rejected.
  current.at(2, 0) = kInvalidDepth;

  Image<uint8_t> alpha = temporal_gate(w, current, cfg);
  CHECK(alpha.at(0, 0) == 0);
  CHECK(alpha.at(1, 0) == 0);
  CHECK(alpha.at(2, 0) == 0);
  CHECK(alpha.at(3, 0) == 1);
}

TEST_CASE("fuse with window 0 returns the current frame verbatim") {
  FusionConfig cfg;
  cfg.window = 0;
  DepthMap depth(8, 6, 1.5f);
  LabelMap labels(8, 6, 3);
  FusedFrame out = fuse(depth, labels, {}, {}, cfg);
  CHECK(out.depth.data == depth.data);
  CHECK(out.labels.data == labels.data);
  for (uint8_t f : out.fallback.data) CHECK(f == 1);
  for (uint16_t s : out.support.data) CHECK(s == 0);
}

TEST_CASE("fuse averages gated depths and majority-votes labels") {
  FusionConfig cfg;
  cfg.window = 3;

  auto frame = [&](float d, uint16_t l) {
    WarpedFrame w;
    w.depth = DepthMap(1, 1, d);
    w.labels = LabelMap(1, 1, l);
    return w;
  };
  Image<uint8_t> on(1, 1, 1), off(1, 1, 0);

  DepthMap current(1, 1, 5.0f);
  LabelMap current_labels(1, 1, 9);

  SECTION("two gated samples 2.0 and 2.2 average to 2.1") {
    FusedFrame out = fuse(current, current_labels,
                          {frame(2.0f, 1), frame(2.2f, 1), frame(9.0f, 1)},
                          {on, on, off}, cfg);
    CHECK(out.support.at(0, 0) == 2);
    CHECK(out.fallback.at(0, 0) == 0);
    CHECK(double(out.depth.at(0, 0)) == Catch::Approx(2.1).margin(1e-6));
  }

  SECTION("votes wall wall chair resolve to wall") {
    FusedFrame out = fuse(current, current_labels,
                          {frame(2.0f, 1), frame(2.0f, 1), frame(2.0f, 2)},
                          {on, on, on}, cfg);
    CHECK(out.labels.at(0, 0) == 1);
  }

  SECTION("vote ties break to the lowest class id") {
    FusedFrame out = fuse(current, current_labels,
                          {frame(2.0f, 5), frame(2.0f, 2)}, {on, on}, cfg);
    CHECK(out.labels.at(0, 0) == 2);
  }

  SECTION("zero support falls back to the current prediction bit-exactly") {
    FusedFrame out = fuse(current, current_labels,
                          {frame(2.0f, 1), frame(2.2f, 1)}, {off, off}, cfg);
    CHECK(out.depth.at(0, 0) == 5.0f);
    CHECK(out.labels.at(0, 0) == 9);
    CHECK(out.fallback.at(0, 0) == 1);
  }
}

TEST_CASE("fused depth is convex over the gated samples") {
  FusionConfig cfg;
  cfg.window = 5;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(1.0, 6.0);
  std::uniform_int_distribution<int> gate(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    DepthMap current(1, 1, float(u(rng)));
    LabelMap labels(1, 1, 0);
    std::vector<WarpedFrame> window;
    std::vector<Image<uint8_t>> gates;
    double lo = 1e18, hi = -1e18;
    int support = 0;
    for (int wi = 0; wi < 5; ++wi) {
      WarpedFrame w;
      w.depth = DepthMap(1, 1, float(u(rng)));
      w.labels = LabelMap(1, 1, uint16_t(wi % 3));
      const int g = gate(rng);
      if (g) {
        lo = std::min(lo, double(w.depth.at(0, 0)));
        hi = std::max(hi, double(w.depth.at(0, 0)));
        ++support;
      }
      window.push_back(std::move(w));
      gates.push_back(Image<uint8_t>(1, 1, uint8_t(g)));
    }
    FusedFrame out = fuse(current, labels, window, gates, cfg);
    REQUIRE(out.support.at(0, 0) == support);
    if (support > 0) {
      CHECK(double(out.depth.at(0, 0)) >= lo - 1e-9);
      CHECK(double(out.depth.at(0, 0)) <= hi + 1e-9);
    } else {
      CHECK(out.depth.at(0, 0) == current.at(0, 0));
    }
  }
}

TEST_CASE("flicker variance drops with a K=3 window on a static scene") {
  CameraIntrinsics k = small_cam();
  FusionConfig cfg;
  cfg.window = 3;
  cfg.delta_d = 1.0;  // wide gate; flicker stays within it
  TemporalFusion fusion(cfg, k);

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> flicker(-0.2, 0.2);
  const int frames = 120;
  std::vector<double> raw_center, fused_center;
  for (int f = 0; f < frames; ++f) {
    const float d = float(3.0 + flicker(rng));
    DepthMap depth(32, 24, d);
    LabelMap labels(32, 24, 1);
    FusedFrame fused = fusion.process(depth, labels, Pose::identity());
    raw_center.push_back(double(d));
    fused_center.push_back(double(fused.depth.at(16, 12)));
  }
  auto variance = [](const std::vector<double>& v) {
    double mean = 0;
    for (double x : v) mean += x;
    mean /= double(v.size());
    double acc = 0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return acc / double(v.size());
  };
  std::vector<double> raw_tail(raw_center.begin() + 5, raw_center.end());
  std::vector<double> fused_tail(fused_center.begin() + 5, fused_center.end());
  CHECK(variance(fused_tail) < 0.5 * variance(raw_tail));
}

TEST_CASE("dynamic labels never contribute to the fused maps") {
  CameraIntrinsics k = small_cam();
  FusionConfig cfg;
  cfg.window = 3;
  cfg.delta_d = 1.0;
  cfg.dynamic_ids = {6};
  TemporalFusion fusion(cfg, k);
  for (int f = 0; f < 10; ++f) {
    DepthMap depth(32, 24, 2.0f);
    LabelMap labels(32, 24, f % 2 ? 6 : 1);  // alternating dynamic frames
    FusedFrame fused = fusion.process(depth, labels, Pose::identity());
    for (size_t i = 0; i < fused.labels.size(); ++i) {
      if (fused.support.data[i] > 0) {
        CHECK(fused.labels.data[i] != 6);
      }
    }
  }
}
