#pragma once

// Batch experiment driver: full-pipeline runs over simulated packet streams,
// the component ablation matrix, metric reports, and plot-data emission.
//
// Per-frame order: IMU propagation -> pose-warp fusion against the predicted
// pose -> sparse depth sampling and semantic masking on the fused maps ->
// filter update -> volumetric integration at the updated pose. With K = 0
// the fusion stage passes raw predictions through unchanged.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sgslam/eval/metrics.hpp"
#include "sgslam/fusion/temporal.hpp"
#include "sgslam/graph/pose_graph.hpp"
#include "sgslam/io/config.hpp"
#include "sgslam/io/packet_io.hpp"
#include "sgslam/io/ply.hpp"
#include "sgslam/map/map_graph.hpp"
#include "sgslam/map/voxel_map.hpp"
#include "sgslam/vio/pipeline.hpp"

namespace sgslam {

struct FeatureFlags {
  bool depth_factors = true;
  bool semantic_mask = true;
  int temporal_k = 0;  // canonical ablation points: 0, 1, 3, 5
};

struct RunConfig {
  std::string label = "run";
  uint64_t seed = 1;
  SceneSpec scene;  // as parsed; the simulator re-expresses it internally
  NoiseSpec noise;
  SimConfig sim;
  FeatureFlags flags;
  GateConfig gates;
  FilterConfig filter;
  FusionConfig fusion;  // window is overridden by flags.temporal_k
  double voxel_size = 0.1;
  MapGraphConfig map_graph;
  GraphMatchConfig match;
  OdometryNoise odom_noise;
  double loop_radius = 1.0;
  int loop_min_separation = 30;
  bool accept_loop_edges = false;  // diagnostic-only by default
  double loop_gt_radius = 0.5;
  double loop_rot_sigma = 0.002;
  double loop_trans_sigma = 0.01;
};

inline RunConfig parse_run_config(const ConfigTable& cfg) {
  RunConfig rc;
  rc.label = cfg.get_string("run.label", "run");
  rc.seed = uint64_t(cfg.get_int("run.seed", 1));
  rc.scene = parse_scene(cfg);
  rc.noise = parse_noise(cfg);
  rc.noise.seed = rc.seed;

  rc.sim.duration = cfg.get_double("run.duration", 10.0);
  rc.sim.frame_rate = cfg.get_double("run.frame_rate", 20.0);
  rc.sim.imu_rate = cfg.get_double("run.imu_rate", 200.0);
  rc.sim.max_range = cfg.get_double("run.max_range", 30.0);
  rc.sim.n_static_landmarks = int(cfg.get_int("run.static_landmarks", 900));
  rc.sim.n_agent_landmarks = int(cfg.get_int("run.agent_landmarks", 12));
  rc.sim.intrinsics = CameraIntrinsics(
      cfg.get_double("camera.fx", 120.0), cfg.get_double("camera.fy", 120.0),
      cfg.get_double("camera.cx", 79.5), cfg.get_double("camera.cy", 59.5),
      int(cfg.get_int("camera.width", 160)),
      int(cfg.get_int("camera.height", 120)));

  rc.sim.trajectory.profile =
      profile_from_string(cfg.get_string("trajectory.profile", "figure_eight"));
  if (const ConfigValue* c = cfg.find("trajectory.center")) {
    auto v = c->as_double_array();
    rc.sim.trajectory.center = Vec2(v.at(0), v.at(1));
  }
  rc.sim.trajectory.radius_x = cfg.get_double("trajectory.radius_x", 2.0);
  rc.sim.trajectory.radius_y = cfg.get_double("trajectory.radius_y", 1.2);
  rc.sim.trajectory.period = cfg.get_double("trajectory.period", 20.0);
  rc.sim.trajectory.height = cfg.get_double("trajectory.height", 1.4);
  if (const ConfigValue* v = cfg.find("trajectory.line_velocity")) {
    auto a = v->as_double_array();
    rc.sim.trajectory.line_velocity = Vec3(a.at(0), a.at(1), a.at(2));
  }
  if (const ConfigValue* w = cfg.find("trajectory.scan_waypoints")) {
    for (const auto& p : w->as_array()) {
      auto v = p.as_double_array();
      rc.sim.trajectory.scan_waypoints.emplace_back(v.at(0), v.at(1));
    }
  }

  rc.flags.depth_factors = cfg.get_bool("flags.depth_factors", true);
  rc.flags.semantic_mask = cfg.get_bool("flags.semantic_mask", true);
  rc.flags.temporal_k = int(cfg.get_int("flags.temporal_k", 0));

  rc.gates.tau_omega = cfg.get_double("vio.gates.tau_omega", 0.8);
  rc.gates.tau_pi = cfg.get_double("vio.gates.tau_pi", 2.0);
  rc.gates.s_d = int(cfg.get_int("vio.gates.s_d", 4));
  rc.gates.lambda_d = cfg.get_double("vio.gates.lambda_d", 1.0);
  rc.gates.sigma0 = cfg.get_double("vio.gates.sigma0", 0.05);
  rc.gates.sigma1 = cfg.get_double("vio.gates.sigma1", 0.02);
  rc.gates.ratio_threshold = cfg.get_double("vio.gates.ratio_threshold", 0.7);
  rc.gates.huber_delta = cfg.get_double("vio.gates.huber_delta", 1.345);
  rc.gates.sigma_px = cfg.get_double("vio.gates.sigma_px", 1.0);

  rc.filter.gates = rc.gates;
  rc.filter.max_clones = int(cfg.get_int("vio.max_clones", 8));
  rc.filter.max_landmarks = int(cfg.get_int("vio.max_landmarks", 56));
  rc.filter.gyro_noise = cfg.get_double("vio.gyro_noise", 2e-4);
  rc.filter.accel_noise = cfg.get_double("vio.accel_noise", 2e-3);
  rc.filter.gyro_bias_walk = cfg.get_double("vio.gyro_bias_walk", 1e-5);
  rc.filter.accel_bias_walk = cfg.get_double("vio.accel_bias_walk", 1e-4);
  rc.filter.min_parallax_deg = cfg.get_double("vio.min_parallax_deg", 1.0);
  rc.filter.max_track_gap = int(cfg.get_int("vio.max_track_gap", 2));
  rc.filter.oracle_check = cfg.get_bool("vio.oracle_check", false);

  rc.fusion.delta_d = cfg.get_double("fusion.delta_d", 0.15);
  rc.fusion.epsilon = cfg.get_double("fusion.epsilon", 1e-9);

  rc.voxel_size = cfg.get_double("mapping.voxel_size", 0.1);
  rc.map_graph.min_voxels = int(cfg.get_int("mapping.min_voxels", 5));
  rc.map_graph.place_spacing = cfg.get_double("mapping.place_spacing", 0.8);

  rc.match.object_radius = cfg.get_double("metrics.object_radius", 0.5);
  rc.match.place_radius = cfg.get_double("metrics.place_radius", 0.5);

  rc.odom_noise.rot_sigma = cfg.get_double("graph.odom_rot_sigma", 0.005);
  rc.odom_noise.trans_sigma = cfg.get_double("graph.odom_trans_sigma", 0.01);
  rc.loop_radius = cfg.get_double("graph.loop_radius", 1.0);
  rc.loop_min_separation = int(cfg.get_int("graph.loop_min_separation", 30));
  rc.accept_loop_edges = cfg.get_bool("graph.accept_loop_edges", false);
  rc.loop_gt_radius = cfg.get_double("graph.loop_gt_radius", 0.5);
  rc.loop_rot_sigma = cfg.get_double("graph.loop_rot_sigma", 0.002);
  rc.loop_trans_sigma = cfg.get_double("graph.loop_trans_sigma", 0.01);
  return rc;
}

/// Config echo for provenance; every effective value lands in the report.
inline nlohmann::ordered_json config_echo(const RunConfig& rc) {
  nlohmann::ordered_json j;
  j["label"] = rc.label;
  j["seed"] = rc.seed;
  j["flags"] = {{"depth_factors", rc.flags.depth_factors},
                {"semantic_mask", rc.flags.semantic_mask},
                {"temporal_k", rc.flags.temporal_k}};
  j["vio"] = {{"tau_omega", rc.gates.tau_omega},
              {"tau_pi", rc.gates.tau_pi},
              {"s_d", rc.gates.s_d},
              {"lambda_d", rc.gates.lambda_d},
              {"sigma0", rc.gates.sigma0},
              {"sigma1", rc.gates.sigma1},
              {"ratio_threshold", rc.gates.ratio_threshold},
              {"huber_delta", rc.gates.huber_delta},
              {"sigma_px", rc.gates.sigma_px},
              {"max_clones", rc.filter.max_clones},
              {"max_landmarks", rc.filter.max_landmarks}};
  j["fusion"] = {{"delta_d", rc.fusion.delta_d}, {"epsilon", rc.fusion.epsilon}};
  j["mapping"] = {{"voxel_size", rc.voxel_size},
                  {"min_voxels", rc.map_graph.min_voxels},
                  {"place_spacing", rc.map_graph.place_spacing}};
  j["metrics"] = {{"object_radius", rc.match.object_radius},
                  {"place_radius", rc.match.place_radius}};
  j["noise"] = {{"depth_sigma0", rc.noise.depth_sigma0},
                {"depth_sigma1", rc.noise.depth_sigma1},
                {"label_flip_prob", rc.noise.label_flip_prob},
                {"flicker_amplitude", rc.noise.flicker_amplitude},
                {"gyro_noise", rc.noise.gyro_noise},
                {"accel_noise", rc.noise.accel_noise},
                {"gyro_bias_walk", rc.noise.gyro_bias_walk},
                {"accel_bias_walk", rc.noise.accel_bias_walk},
                {"descriptor_noise", rc.noise.descriptor_noise},
                {"pixel_noise", rc.noise.pixel_noise}};
  return j;
}

struct FrameStats {
  double timestamp = 0.0;
  double fused_depth_change = 0.0;  // mean |D_t - D_{t-1}| on shared pixels
  double support_mean = 0.0;
  int depth_factor_count = 0;
};

struct RunResult {
  Trajectory estimate;
  Trajectory ground_truth;
  VoxelMap map{0.1};
  std::vector<ExtractedObject> objects;
  SceneGraph predicted_graph;
  SceneGraph reference_graph;
  LabeledCloud predicted_cloud;
  LabeledCloud surface_cloud;
  std::vector<LoopCandidate> loop_candidates;
  std::vector<FrameStats> frame_stats;

  // Metric summary
  double ate = 0.0;
  ReconQuality recon;
  MeshIoU miou;
  F1Result radius_f1_result;
  F1Result box_f1_result;
  GraphEditResult graph_edit;
  LayerScores layers;

  // Wall-clock stage breakdown (non-deterministic, reported separately).
  std::map<std::string, double> stage_ms;
};

/// Executes the full pipeline over an in-memory stream.
inline RunResult run_pipeline(const SimStream& stream, const RunConfig& rc) {
  using clock = std::chrono::steady_clock;
  auto ms_since = [](clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };

  RunResult result;
  result.map = VoxelMap(rc.voxel_size);
  result.ground_truth = stream.gt_trajectory;
  result.reference_graph = stream.reference_graph;

  VioConfig vio_cfg;
  vio_cfg.filter = rc.filter;
  vio_cfg.filter.gates = rc.gates;
  vio_cfg.filter.enable_depth_factors = rc.flags.depth_factors;
  vio_cfg.semantic_mask = rc.flags.semantic_mask;

  FusionConfig fusion_cfg = rc.fusion;
  fusion_cfg.window = rc.flags.temporal_k;
  fusion_cfg.dynamic_ids = stream.scene.dynamic_label_ids();

  const CameraIntrinsics& k = stream.config.intrinsics;
  const Pose t_bc = body_to_camera();
  VioPipeline vio(vio_cfg, k, t_bc, stream.initial_velocity,
                  stream.scene.dynamic_label_ids());
  TemporalFusion fusion(fusion_cfg, k);

  DepthMap prev_fused;
  for (const auto& pkt : stream.packets) {
    auto t0 = clock::now();
    const Pose predicted_wc = vio.predict(pkt);
    result.stage_ms["vio_propagate"] += ms_since(t0);

    t0 = clock::now();
    FusedFrame fused = fusion.process(pkt.depth, pkt.labels, predicted_wc);
    result.stage_ms["fusion"] += ms_since(t0);

    t0 = clock::now();
    OdometrySample odom = vio.process(pkt, fused.depth, fused.labels);
    result.stage_ms["vio_update"] += ms_since(t0);

    t0 = clock::now();
    result.map.integrate_frame(fused, odom.pose * t_bc, k);
    result.stage_ms["mapping"] += ms_since(t0);

    FrameStats stats;
    stats.timestamp = pkt.timestamp;
    double support = 0.0;
    for (uint16_t s : fused.support.data) support += s;
    stats.support_mean = support / double(fused.support.size());
    if (prev_fused.size() == fused.depth.size()) {
      double acc = 0.0;
      int count = 0;
      for (size_t i = 0; i < fused.depth.size(); ++i) {
        if (depth_valid(fused.depth.data[i]) &&
            depth_valid(prev_fused.data[i])) {
          acc += std::abs(double(fused.depth.data[i]) -
                          double(prev_fused.data[i]));
          ++count;
        }
      }
      stats.fused_depth_change = count ? acc / count : 0.0;
    }
    result.frame_stats.push_back(stats);
    prev_fused = fused.depth;
  }

  result.estimate = vio.trajectory();

  // Scene-graph assembly.
  auto t0 = clock::now();
  std::vector<uint16_t> object_ids;
  for (size_t i = 0; i < stream.scene.label_set.size(); ++i) {
    if (!stream.scene.is_structural_label(uint16_t(i)) &&
        !stream.scene.is_dynamic_label(uint16_t(i))) {
      object_ids.push_back(uint16_t(i));
    }
  }
  result.objects = extract_objects(result.map, stream.scene.label_set,
                                   object_ids, rc.map_graph.min_voxels);
  assign_rooms(result.objects, stream.scene.rooms);
  result.predicted_graph =
      build_scene_graph(result.map, result.objects, stream.scene, rc.map_graph);
  result.stage_ms["scene_graph"] += ms_since(t0);

  // Pose graph: diagnostic loop proposals; optimization rewrites the
  // estimate only when loop edges are explicitly enabled.
  t0 = clock::now();
  if (result.estimate.size() >= 2) {
    PoseGraph graph = build_graph(result.estimate, rc.odom_noise);
    result.loop_candidates =
        propose_loops(result.estimate, rc.loop_radius, rc.loop_min_separation);
    if (rc.accept_loop_edges) {
      accept_loops(result.loop_candidates, result.ground_truth,
                   rc.loop_gt_radius, rc.loop_rot_sigma, rc.loop_trans_sigma,
                   rc.seed);
      add_loop_edges(graph, result.loop_candidates, rc.loop_rot_sigma,
                     rc.loop_trans_sigma);
      if (!graph.loops.empty()) {
        optimize(graph);
        for (size_t i = 0; i < result.estimate.size(); ++i) {
          result.estimate[i].pose = graph.nodes[i];
        }
      }
    }
  }
  result.stage_ms["pose_graph"] += ms_since(t0);

  // Metrics.
  t0 = clock::now();
  result.ate = ate_rmse(result.estimate, result.ground_truth, Alignment::kRigid);
  const World world = build_world(stream.scene);
  result.surface_cloud = sample_surface_cloud(world, stream.scene, 0.1);
  result.predicted_cloud = result.map.to_cloud();
  if (!result.predicted_cloud.points.empty()) {
    result.recon = recon_quality(result.predicted_cloud.points,
                                 result.surface_cloud.points);
    result.miou = mesh_label_miou(result.predicted_cloud, result.surface_cloud,
                                  int(stream.scene.label_set.size()));
  }
  const auto pred_objects = copy_layer(result.predicted_graph, GraphLayer::kObject);
  const auto ref_objects = copy_layer(result.reference_graph, GraphLayer::kObject);
  result.radius_f1_result =
      radius_f1(pred_objects, ref_objects, rc.match.object_radius);
  result.box_f1_result = box_f1(pred_objects, ref_objects, 0.25);
  result.graph_edit =
      graph_similarity(result.predicted_graph, result.reference_graph, rc.match);
  result.layers =
      layer_f1s(result.predicted_graph, result.reference_graph, rc.match);
  result.stage_ms["metrics"] += ms_since(t0);
  return result;
}

inline nlohmann::ordered_json metrics_json(const RunResult& r) {
  nlohmann::ordered_json j;
  j["ate_rmse"] = r.ate;
  j["recon"] = {{"accuracy", r.recon.accuracy},
                {"completeness", r.recon.completeness},
                {"chamfer", r.recon.chamfer}};
  j["mesh_miou"] = r.miou.mean;
  j["radius_f1"] = {{"precision", r.radius_f1_result.precision},
                    {"recall", r.radius_f1_result.recall},
                    {"f1", r.radius_f1_result.f1}};
  j["box_f1"] = {{"precision", r.box_f1_result.precision},
                 {"recall", r.box_f1_result.recall},
                 {"f1", r.box_f1_result.f1}};
  j["scene_graph_similarity"] = r.graph_edit.s_sg;
  j["graph_edit"] = {{"d_v", r.graph_edit.d_v}, {"d_e", r.graph_edit.d_e}};
  j["node_f1"] = r.layers.node_f1.f1;
  j["object_room_accuracy"] = r.layers.object_room_accuracy;
  j["room_f1"] = r.layers.room_f1.f1;
  j["place_coverage_f1"] = r.layers.place_coverage_f1.f1;
  j["relation_f1"] = r.layers.relation_f1.f1;
  j["loop_candidates"] = r.loop_candidates.size();
  j["object_count"] = r.objects.size();
  j["voxel_count"] = r.map.size();
  return j;
}

/// Writes the deterministic report plus artifacts; wall-clock timings go to
/// a separate file so reruns stay byte-identical.
inline void write_run_artifacts(const std::string& dir, const RunConfig& rc,
                                const RunResult& r,
                                const nlohmann::ordered_json* baseline = nullptr) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  write_trajectory_csv(dir + "/trajectory_est.csv", r.estimate);
  write_trajectory_csv(dir + "/trajectory_gt.csv", r.ground_truth);
  write_ply(dir + "/map.ply", r.predicted_cloud);
  {
    std::ofstream out(dir + "/scene_graph.json");
    out << to_json(r.predicted_graph).dump(2) << "\n";
  }
  {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& c : r.loop_candidates) {
      j.push_back({{"p", c.p},
                   {"q", c.q},
                   {"distance", c.distance},
                   {"accepted", c.accepted}});
    }
    std::ofstream out(dir + "/loop_candidates.json");
    out << j.dump(2) << "\n";
  }
  {
    std::ofstream out(dir + "/frame_stats.csv");
    out << "timestamp,fused_depth_change,support_mean\n";
    char buf[128];
    for (const auto& s : r.frame_stats) {
      std::snprintf(buf, sizeof(buf), "%.9f,%.9f,%.9f\n", s.timestamp,
                    s.fused_depth_change, s.support_mean);
      out << buf;
    }
  }

  nlohmann::ordered_json report;
  report["config"] = config_echo(rc);
  report["metrics"] = metrics_json(r);
  if (baseline) {
    const double base_ate = (*baseline)["metrics"]["ate_rmse"].get<double>();
    const double base_node = (*baseline)["metrics"]["node_f1"].get<double>();
    nlohmann::ordered_json rel;
    rel["ate_improvement_pct"] =
        base_ate > 0 ? (base_ate - r.ate) / base_ate * 100.0 : 0.0;
    rel["node_f1_improvement_pct"] =
        base_node > 0 ? (r.layers.node_f1.f1 - base_node) / base_node * 100.0
                      : 0.0;
    report["relative_to_baseline"] = rel;
  }
  {
    std::ofstream out(dir + "/report.json");
    out << report.dump(2) << "\n";
  }
  {
    nlohmann::ordered_json timings;
    for (const auto& [stage, ms] : r.stage_ms) timings[stage] = ms;
    std::ofstream out(dir + "/timings.json");
    out << timings.dump(2) << "\n";
  }
}

// ---------------------------------------------------------------------------
// Ablation matrix
// ---------------------------------------------------------------------------

struct AblationRow {
  std::string name;
  FeatureFlags flags;
  double ate = 0.0;
  double node_f1 = 0.0;
  double chamfer = 0.0;
  double s_sg = 0.0;
};

inline std::vector<AblationRow> ablation_matrix() {
  std::vector<AblationRow> rows;
  rows.push_back({"baseline", {false, false, 0}});
  rows.push_back({"depth_sparse_factors", {true, false, 0}});
  rows.push_back({"semantic_mask", {false, true, 0}});
  rows.push_back({"depth+mask_k0", {true, true, 0}});
  rows.push_back({"depth+mask_k1", {true, true, 1}});
  rows.push_back({"depth+mask_k3", {true, true, 3}});
  rows.push_back({"depth+mask_k5", {true, true, 5}});
  return rows;
}

/// Runs the 7-row matrix on one packet stream; relative columns follow the
/// reporting convention where positive means improvement.
inline std::vector<AblationRow> run_ablation(const SimStream& stream,
                                             const RunConfig& base_cfg) {
  std::vector<AblationRow> rows = ablation_matrix();
  for (auto& row : rows) {
    RunConfig rc = base_cfg;
    rc.flags = row.flags;
    rc.label = row.name;
    RunResult r = run_pipeline(stream, rc);
    row.ate = r.ate;
    row.node_f1 = r.layers.node_f1.f1;
    row.chamfer = r.recon.chamfer;
    row.s_sg = r.graph_edit.s_sg;
  }
  return rows;
}

inline std::string format_relative(double value, double baseline, bool lower_better) {
  if (baseline == 0.0) return "(--)";
  const double pct = lower_better ? (baseline - value) / baseline * 100.0
                                  : (value - baseline) / baseline * 100.0;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "(%+.1f%%)", pct);
  return buf;
}

inline void write_ablation_outputs(const std::string& dir,
                                   const std::vector<AblationRow>& rows) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const AblationRow& base = rows.front();

  std::ofstream csv(dir + "/ablation.csv");
  csv << "configuration,ate,ate_rel,node_f1,node_f1_rel,chamfer,scene_graph_similarity\n";
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (size_t i = 0; i < rows.size(); ++i) {
    const AblationRow& r = rows[i];
    const std::string ate_rel =
        i == 0 ? "--" : format_relative(r.ate, base.ate, true);
    const std::string node_rel =
        i == 0 ? "--" : format_relative(r.node_f1, base.node_f1, false);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%s,%.6f,%s,%.6f,%.6f\n",
                  r.name.c_str(), r.ate, ate_rel.c_str(), r.node_f1,
                  node_rel.c_str(), r.chamfer, r.s_sg);
    csv << buf;
    j.push_back({{"configuration", r.name},
                 {"ate", r.ate},
                 {"ate_rel", ate_rel},
                 {"node_f1", r.node_f1},
                 {"node_f1_rel", node_rel},
                 {"chamfer", r.chamfer},
                 {"scene_graph_similarity", r.s_sg}});
  }
  std::ofstream out(dir + "/ablation.json");
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Report emission (plot data)
// ---------------------------------------------------------------------------

/// Emits per-frame ATE, fused-depth change, and loop-candidate CSVs from a
/// completed run directory.
inline void emit_report_files(const std::string& run_dir,
                              const std::string& out_dir) {
  namespace fs = std::filesystem;
  if (!fs::exists(run_dir + "/trajectory_est.csv")) {
    throw Error(ErrorCode::kIoError, "not a completed run dir: " + run_dir);
  }
  fs::create_directories(out_dir);

  Trajectory est = read_trajectory_csv(run_dir + "/trajectory_est.csv");
  Trajectory gt = read_trajectory_csv(run_dir + "/trajectory_gt.csv");
  auto residuals = ate_residuals(est, gt, Alignment::kRigid);
  {
    std::ofstream out(out_dir + "/ate_curve.csv");
    out << "timestamp,ate\n";
    char buf[64];
    for (size_t i = 0; i < residuals.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.9f,%.9f\n", est[i].timestamp,
                    residuals[i]);
      out << buf;
    }
  }
  {
    std::ifstream in(run_dir + "/frame_stats.csv");
    std::ofstream out(out_dir + "/flicker_curve.csv");
    out << "timestamp,fused_depth_variance\n";
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      std::istringstream ss(line);
      std::string ts, change, support;
      std::getline(ss, ts, ',');
      std::getline(ss, change, ',');
      out << ts << "," << change << "\n";
    }
  }
  {
    std::ifstream in(run_dir + "/loop_candidates.json");
    nlohmann::json j = nlohmann::json::parse(in);
    std::ofstream out(out_dir + "/loop_candidates.csv");
    out << "p,q,distance,accepted\n";
    for (const auto& c : j) {
      out << c.at("p").get<int>() << "," << c.at("q").get<int>() << ","
          << c.at("distance").get<double>() << ","
          << (c.at("accepted").get<bool>() ? 1 : 0) << "\n";
    }
  }
}

}  // namespace sgslam
