// Batch experiment CLI: simulate packet streams, run the full pipeline,
// sweep the component ablation matrix, and emit plot data.
//
// Exit codes: 0 success, 1 pipeline failure, 2 usage/config error.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sgslam/io/config.hpp"
#include "sgslam/io/packet_io.hpp"
#include "sgslam/pipeline/run.hpp"

namespace {

using namespace sgslam;

ConfigTable load_config(const std::string& path,
                        const std::vector<std::string>& overrides) {
  ConfigTable cfg = parse_config_file(path);
  for (const auto& o : overrides) apply_override(cfg, o);
  return cfg;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 const std::vector<std::string>& overrides) {
  ConfigTable cfg = load_config(config_path, overrides);
  RunConfig rc = parse_run_config(cfg);
  SimStream stream = simulate(rc.scene, rc.noise, rc.sim);
  write_stream(out_dir, stream);
  std::printf("simulate: %zu packets -> %s\n", stream.packets.size(),
              out_dir.c_str());
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& packets_dir,
            const std::string& out_dir, const std::string& baseline_path,
            const std::vector<std::string>& overrides) {
  ConfigTable cfg = load_config(config_path, overrides);
  RunConfig rc = parse_run_config(cfg);
  SimStream stream = load_stream(packets_dir);

  nlohmann::ordered_json baseline;
  const nlohmann::ordered_json* baseline_ptr = nullptr;
  if (!baseline_path.empty()) {
    std::ifstream in(baseline_path);
    if (!in) {
      throw Error(ErrorCode::kIoError, "cannot open baseline: " + baseline_path);
    }
    baseline = nlohmann::ordered_json::parse(in);
    baseline_ptr = &baseline;
  }

  RunResult result = run_pipeline(stream, rc);
  write_run_artifacts(out_dir, rc, result, baseline_ptr);
  std::printf("run '%s': ate=%.4f node_f1=%.4f s_sg=%.4f -> %s\n",
              rc.label.c_str(), result.ate, result.layers.node_f1.f1,
              result.graph_edit.s_sg, out_dir.c_str());
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& out_dir,
               const std::vector<std::string>& overrides) {
  ConfigTable cfg = load_config(config_path, overrides);
  RunConfig rc = parse_run_config(cfg);
  SimStream stream = simulate(rc.scene, rc.noise, rc.sim);
  std::vector<AblationRow> rows = run_ablation(stream, rc);
  write_ablation_outputs(out_dir, rows);
  for (size_t i = 0; i < rows.size(); ++i) {
    const std::string rel =
        i == 0 ? "(--)" : format_relative(rows[i].ate, rows[0].ate, true);
    std::printf("%-22s ate=%.4f %-9s node_f1=%.4f chamfer=%.4f s_sg=%.4f\n",
                rows[i].name.c_str(), rows[i].ate, rel.c_str(), rows[i].node_f1,
                rows[i].chamfer, rows[i].s_sg);
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs,
               const std::string& out_dir) {
  for (const auto& dir : run_dirs) {
    const std::string dst =
        run_dirs.size() == 1
            ? out_dir
            : out_dir + "/" + std::filesystem::path(dir).filename().string();
    emit_report_files(dir, dst);
    std::printf("report: %s -> %s\n", dir.c_str(), dst.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metric-semantic SLAM testbed: simulator, square-root VIO, "
               "temporal fusion, voxel mapping, scene graphs, and metrics"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", packets_dir, baseline_path;
  std::vector<std::string> overrides;
  std::vector<std::string> run_dirs;

  auto* sim = app.add_subcommand("simulate", "Generate a packet stream");
  sim->add_option("--config", config_path, "Run configuration file")->required();
  sim->add_option("--out", out_dir, "Output packet directory")->required();
  sim->add_option("--set", overrides, "Override config keys (key=value)");

  auto* run = app.add_subcommand("run", "Execute the pipeline on packets");
  run->add_option("--config", config_path, "Run configuration file")->required();
  run->add_option("--packets", packets_dir, "Packet directory")->required();
  run->add_option("--out", out_dir, "Run output directory")->required();
  run->add_option("--baseline", baseline_path, "Baseline report.json");
  run->add_option("--set", overrides, "Override config keys (key=value)");

  auto* ablate = app.add_subcommand("ablate", "Run the 7-row ablation matrix");
  ablate->add_option("--config", config_path, "Run configuration file")->required();
  ablate->add_option("--out", out_dir, "Ablation output directory")->required();
  ablate->add_option("--set", overrides, "Override config keys (key=value)");

  auto* report = app.add_subcommand("report", "Emit plot CSVs from run dirs");
  report->add_option("--run", run_dirs, "Completed run directory")->required();
  report->add_option("--out", out_dir, "Report output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(config_path, out_dir, overrides);
    if (run->parsed()) {
      return cmd_run(config_path, packets_dir, out_dir, baseline_path, overrides);
    }
    if (ablate->parsed()) return cmd_ablate(config_path, out_dir, overrides);
    if (report->parsed()) return cmd_report(run_dirs, out_dir);
  } catch (const sgslam::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    switch (e.code()) {
      case sgslam::ErrorCode::kParseError:
      case sgslam::ErrorCode::kIoError:
      case sgslam::ErrorCode::kSceneInvalid:
        return 2;
      default:
        return 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
