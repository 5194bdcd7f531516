// dorloc: dynamic-observation-range localization toolkit.
//
// Pipeline: scene -> build-map -> sweep -> factors -> train -> plan ->
// compare, with `report` turning sweep output into summaries or plot data.
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dorloc/csv.hpp"
#include "dorloc/harness.hpp"

namespace fs = std::filesystem;
using namespace dor;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::string timing_mode;
  std::uint64_t seed = 0;
  bool seed_given = false;

  EvalConfig load() const {
    EvalConfig config;
    if (!config_path.empty()) {
      config = read_eval_config(config_path);
    }
    if (seed_given) {
      config.seed = seed;
    }
    if (!timing_mode.empty()) {
      config.timing_mode = timing_mode == "parallel"
                               ? EvalConfig::TimingMode::parallel
                               : EvalConfig::TimingMode::serial;
    }
    config.validate();
    return config;
  }

  fs::path out(const std::string& name) const {
    fs::create_directories(out_dir);
    return fs::path(out_dir) / name;
  }
};

std::string range_tag(double range) {
  std::string tag = format_double(range);
  for (char& c : tag) {
    if (c == '.') c = '_';
  }
  return tag;
}

ErrorModelSet load_models(const fs::path& dir, const EvalConfig& config) {
  ErrorModelSet models;
  models.range_as_feature = config.range_as_feature;
  if (config.range_as_feature) {
    models.models.push_back(load_forest(dir / "model_all_ranges.txt"));
    return models;
  }
  for (double range : config.candidate_ranges) {
    models.models.push_back(
        load_forest(dir / ("model_r" + range_tag(range) + ".txt")));
  }
  return models;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynamic observation range localization toolkit"};
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--config", global.config_path, "evaluation config file");
  app.add_option("--out-dir", global.out_dir, "output directory")
      ->capture_default_str();
  app.add_option("--seed", global.seed, "override the config seed")
      ->each([&](const std::string&) { global.seed_given = true; });
  app.add_option("--timing-mode", global.timing_mode,
                 "serial | parallel (overrides the config)")
      ->check(CLI::IsMember({"serial", "parallel"}));

  // scene
  auto* scene_cmd =
      app.add_subcommand("scene", "generate the synthetic scene and trajectory");
  std::string scene_spec_path;
  scene_cmd->add_option("--spec", scene_spec_path,
                        "scene spec file (defaults to the built-in corpus)");

  // build-map
  auto* map_cmd = app.add_subcommand("build-map", "build an NDT map from a cloud");
  std::string cloud_path;
  map_cmd->add_option("--cloud", cloud_path, "scene cloud file")->required();

  // factors
  auto* factors_cmd =
      app.add_subcommand("factors", "extract map factors along a trajectory");
  std::string factors_map_path, factors_traj_path;
  factors_cmd->add_option("--map", factors_map_path, "NDT map file")->required();
  factors_cmd->add_option("--trajectory", factors_traj_path, "trajectory CSV")
      ->required();

  // sweep
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "evaluate error and matching time per waypoint and range");
  std::string sweep_scene_path, sweep_traj_path;
  sweep_cmd->add_option("--scene", sweep_scene_path, "scene cloud file")->required();
  sweep_cmd->add_option("--trajectory", sweep_traj_path, "trajectory CSV")
      ->required();

  // train
  auto* train_cmd =
      app.add_subcommand("train", "train error models from factors and errors");
  std::string train_factors_path, train_errors_path;
  train_cmd->add_option("--factors", train_factors_path, "factors CSV")->required();
  train_cmd->add_option("--errors", train_errors_path,
                        "errors CSV (sweep.csv works)")
      ->required();

  // plan
  auto* plan_cmd =
      app.add_subcommand("plan", "select per-waypoint observation ranges");
  std::string plan_map_path, plan_traj_path, plan_models_dir;
  double plan_threshold = -1.0;
  plan_cmd->add_option("--map", plan_map_path, "NDT map file")->required();
  plan_cmd->add_option("--trajectory", plan_traj_path, "trajectory CSV")->required();
  plan_cmd->add_option("--models-dir", plan_models_dir, "trained model directory")
      ->required();
  plan_cmd->add_option("--threshold", plan_threshold,
                       "error budget in cm (defaults to the config threshold)");

  // compare
  auto* compare_cmd = app.add_subcommand(
      "compare", "measure dynamic-range vs static-max-range localization");
  std::string cmp_scene_path, cmp_traj_path, cmp_profile_path;
  compare_cmd->add_option("--scene", cmp_scene_path, "scene cloud file")->required();
  compare_cmd->add_option("--trajectory", cmp_traj_path, "trajectory CSV")
      ->required();
  compare_cmd->add_option("--profile", cmp_profile_path, "range profile CSV")
      ->required();

  // report
  auto* report_cmd =
      app.add_subcommand("report", "re-emit sweep results as csv or plotdata");
  std::string report_sweep_path, report_format = "csv";
  report_cmd->add_option("--sweep", report_sweep_path, "sweep CSV")->required();
  report_cmd->add_option("--format", report_format, "csv | plotdata")
      ->check(CLI::IsMember({"csv", "plotdata"}));

  CLI11_PARSE(app, argc, argv);

  try {
    const EvalConfig config = global.load();

    if (scene_cmd->parsed()) {
      SceneSpec spec = scene_spec_path.empty() ? default_scene_spec()
                                               : read_scene_spec(scene_spec_path);
      if (global.seed_given) spec.seed = global.seed;
      const PointCloud scene = generate_scene(spec);
      const Trajectory traj = make_trajectory(spec, config.waypoint_spacing);
      write_cloud(global.out("scene.xyz"), scene);
      write_trajectory_csv(global.out("trajectory.csv"), traj);
      std::printf("scene: %zu points, %zu waypoints -> %s\n", scene.size(),
                  traj.waypoints.size(), global.out_dir.c_str());
    } else if (map_cmd->parsed()) {
      const PointCloud cloud = read_cloud(cloud_path);
      const NdtMap map = build_ndt_map(cloud, config.cell_size);
      save_ndt_map(global.out("map.txt"), map);
      std::printf("map: %zu cells at %.2f m -> %s\n", map.size(), config.cell_size,
                  global.out_dir.c_str());
    } else if (factors_cmd->parsed()) {
      const NdtMap map = load_ndt_map(factors_map_path);
      const Trajectory traj = read_trajectory_csv(factors_traj_path);
      std::vector<WaypointFactors> rows;
      for (std::size_t w = 0; w < traj.waypoints.size(); ++w) {
        WaypointFactors wf;
        wf.waypoint_id = static_cast<int>(w);
        for (double range : config.candidate_ranges) {
          wf.factors.push_back(factor_vector(map, traj.waypoints[w].position, range,
                                             config.factor_config));
        }
        rows.push_back(std::move(wf));
      }
      write_factors_csv(global.out("factors.csv"), rows);
      std::printf("factors: %zu waypoints x %zu ranges -> %s\n", rows.size(),
                  config.candidate_ranges.size(), global.out_dir.c_str());
    } else if (sweep_cmd->parsed()) {
      const PointCloud scene = read_cloud(sweep_scene_path);
      const Trajectory traj = read_trajectory_csv(sweep_traj_path);
      const std::vector<WaypointReport> reports = sweep_ranges(scene, traj, config);
      emit_report(reports, ReportFormat::csv, global.out_dir);
      std::printf("sweep: %zu waypoints -> %s\n", reports.size(),
                  global.out_dir.c_str());
    } else if (train_cmd->parsed()) {
      const fs::path models_dir = global.out("models");
      fs::create_directories(models_dir);
      SplitRng seeder = SplitRng(config.seed).child(0xF0BE57);
      if (config.range_as_feature) {
        ForestParams params = config.forest;
        params.seed = seeder.next_u64();
        const AssembledData data =
            dataset_from_csv(train_factors_path, train_errors_path, 0.0, true);
        const ForestModel model = train_forest(data.dataset, params, 0.0);
        save_forest(models_dir / "model_all_ranges.txt", model);
        std::printf("train: 1 model on %zu rows (%d dropped) -> %s\n",
                    data.dataset.rows.size(), data.dropped_rows,
                    models_dir.string().c_str());
      } else {
        for (double range : config.candidate_ranges) {
          ForestParams params = config.forest;
          params.seed = seeder.next_u64();
          const AssembledData data =
              dataset_from_csv(train_factors_path, train_errors_path, range, false);
          const ForestModel model = train_forest(data.dataset, params, range);
          save_forest(models_dir / ("model_r" + range_tag(range) + ".txt"), model);
          std::printf("train: range %g on %zu rows (%d dropped)\n", range,
                      data.dataset.rows.size(), data.dropped_rows);
        }
      }
    } else if (plan_cmd->parsed()) {
      const NdtMap map = load_ndt_map(plan_map_path);
      const Trajectory traj = read_trajectory_csv(plan_traj_path);
      const ErrorModelSet models = load_models(plan_models_dir, config);
      const double threshold =
          plan_threshold > 0 ? plan_threshold : config.threshold_cm;
      const RangeProfile profile =
          build_range_profile(models, map, traj, threshold,
                              config.candidate_ranges, config.factor_config);
      write_profile(global.out("profile.csv"), profile);
      int unsatisfied = 0;
      double mean_range = 0;
      for (const RangeProfileEntry& e : profile.entries) {
        if (!e.satisfied) ++unsatisfied;
        mean_range += e.selected_range_m;
      }
      mean_range /= static_cast<double>(profile.entries.size());
      std::printf("plan: mean range %.1f m, %d/%zu waypoints unsatisfied -> %s\n",
                  mean_range, unsatisfied, profile.entries.size(),
                  global.out_dir.c_str());
    } else if (compare_cmd->parsed()) {
      const PointCloud scene = read_cloud(cmp_scene_path);
      const Trajectory traj = read_trajectory_csv(cmp_traj_path);
      const RangeProfile profile = read_profile(cmp_profile_path);
      const ComparisonReport report =
          run_dynamic_comparison(scene, traj, profile, config);
      write_comparison_csv(global.out("comparison.csv"), report);
      std::printf("static  %5.1f m: mean %.2f ms, max %.2f ms, error %.2f cm\n",
                  report.static_range_m, report.static_side.mean_time_ms,
                  report.static_side.max_time_ms, report.static_side.mean_error_cm);
      std::printf("dynamic %5.1f m: mean %.2f ms, max %.2f ms, error %.2f cm\n",
                  report.mean_selected_range_m, report.dynamic_side.mean_time_ms,
                  report.dynamic_side.max_time_ms,
                  report.dynamic_side.mean_error_cm);
      std::printf("%.1f%% of waypoints within %.1f cm\n",
                  report.dynamic_side.pct_within_threshold, report.threshold_cm);
    } else if (report_cmd->parsed()) {
      const std::vector<WaypointReport> reports = read_sweep_csv(report_sweep_path);
      const ReportFormat format = report_format == "plotdata"
                                      ? ReportFormat::plotdata
                                      : ReportFormat::csv;
      const auto files = emit_report(reports, format, global.out_dir);
      for (const auto& file : files) {
        std::printf("wrote %s\n", file.string().c_str());
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
