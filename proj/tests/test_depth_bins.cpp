#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sgslam/depth/bins.hpp"

using namespace sgslam;

TEST_CASE("two equal logits split the range symmetrically") {
  BinConfig cfg{0.1, 10.0, 2};
  BinPartition part = build_bins(VecX::Zero(2), cfg);
  REQUIRE(part.edges.size() == 3);
  CHECK(part.edges[0] == Catch::Approx(0.1).margin(1e-15));
  CHECK(part.edges[1] == Catch::Approx(5.05).margin(1e-12));
  CHECK(part.edges[2] == Catch::Approx(10.0).margin(1e-12));
  CHECK(part.centers[0] == Catch::Approx(2.575).margin(1e-12));
  CHECK(part.centers[1] == Catch::Approx(7.525).margin(1e-12));
}

TEST_CASE("single bin spans the whole range") {
  BinConfig cfg{0.1, 10.0, 1};
  BinPartition part = build_bins(VecX::Zero(1), cfg);
  CHECK(part.widths[0] == 1.0);
  CHECK(part.edges[0] == 0.1);
  CHECK(part.edges[1] == Catch::Approx(10.0).margin(1e-12));
  CHECK(part.centers[0] == Catch::Approx(5.05).margin(1e-12));
}

TEST_CASE("partition invariants over random logits") {
  BinConfig cfg{0.1, 10.0, 32};
  std::mt19937_64 rng(123);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int trial = 0; trial < 10000; ++trial) {
    VecX logits(cfg.n_bins);
    for (int i = 0; i < cfg.n_bins; ++i) logits[i] = n(rng);
    BinPartition part = build_bins(logits, cfg);
    CHECK(std::abs(part.widths.sum() - 1.0) < 1e-9);
    for (int i = 0; i < cfg.n_bins; ++i) {
      CHECK(part.edges[i + 1] > part.edges[i]);
      CHECK(part.centers[i] ==
            Catch::Approx(0.5 * (part.edges[i] + part.edges[i + 1])).margin(1e-12));
    }
    CHECK(std::abs(part.edges[cfg.n_bins] - cfg.d_max) < 1e-9);
  }
}

TEST_CASE("expected depth over the symmetric 2-bin partition") {
  BinConfig cfg{0.1, 10.0, 2};
  BinPartition part = build_bins(VecX::Zero(2), cfg);

  VecX one_hot(2);
  one_hot << 1.0, 0.0;
  CHECK(expected_depth_pixel(one_hot, part) == Catch::Approx(2.575).margin(1e-12));

  VecX uniform(2);
  uniform << 0.5, 0.5;
  CHECK(expected_depth_pixel(uniform, part) == Catch::Approx(5.05).margin(1e-12));
}

TEST_CASE("expected depth matches the direct dot product on random simplices") {
  BinConfig cfg{0.1, 10.0, 16};
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  VecX logits(cfg.n_bins);
  for (int i = 0; i < cfg.n_bins; ++i) logits[i] = n(rng);
  BinPartition part = build_bins(logits, cfg);

  std::gamma_distribution<double> gamma(1.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    VecX probs(cfg.n_bins);
    for (int i = 0; i < cfg.n_bins; ++i) probs[i] = gamma(rng);
    probs /= probs.sum();
    double direct = 0.0;
    for (int i = 0; i < cfg.n_bins; ++i) direct += probs[i] * part.centers[i];
    const double got = expected_depth_pixel(probs, part);
    CHECK(std::abs(got - direct) < 1e-12);
    CHECK(got >= part.centers.minCoeff() - 1e-12);
    CHECK(got <= part.centers.maxCoeff() + 1e-12);
  }
}

TEST_CASE("expected depth rejects non-simplex input") {
  BinConfig cfg{0.1, 10.0, 2};
  BinPartition part = build_bins(VecX::Zero(2), cfg);
  VecX bad(2);
  bad << 0.7, 0.7;
  CHECK_THROWS_AS(expected_depth_pixel(bad, part), Error);
  bad << -0.1, 1.1;
  CHECK_THROWS_AS(expected_depth_pixel(bad, part), Error);
}

TEST_CASE("refine_and_clamp pins values into the metric range") {
  BinConfig cfg{0.1, 10.0, 4};
  VecX coarse(3), offsets(3);
  coarse << 9.5, 3.0, 0.05;
  offsets << 2.5, 0.0, 0.0;
  VecX out = refine_and_clamp(coarse, offsets, cfg);
  CHECK(out[0] == 10.0);   // ceiling
  CHECK(out[1] == 3.0);    // zero offset passthrough
  CHECK(out[2] == 0.1);    // floor
}

TEST_CASE("clamped outputs never leave the range under random offsets") {
  BinConfig cfg{0.1, 10.0, 4};
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> uc(-5.0, 15.0);
  std::uniform_real_distribution<double> uo(-4.0, 4.0);
  VecX coarse(1000), offsets(1000);
  for (int i = 0; i < 1000; ++i) {
    coarse[i] = uc(rng);
    offsets[i] = uo(rng);
  }
  VecX out = refine_and_clamp(coarse, offsets, cfg);
  CHECK(out.minCoeff() >= cfg.d_min);
  CHECK(out.maxCoeff() <= cfg.d_max);
}
