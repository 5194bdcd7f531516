#include "dorloc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "dorloc/csv.hpp"
#include "dorloc/rng.hpp"

namespace dor {

namespace {
constexpr std::uint64_t kScanNoiseTag = 0xA11CE;
constexpr std::uint64_t kTrainTag = 0xF0BE57;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

std::vector<Pose> EvalConfig::default_offsets() {
  // Identity plus a ring of planar offsets. The ring radius stays within the
  // attraction basin of a 1 m NDT grid (about one cell); offsets beyond it
  // cannot converge anywhere and wash out the error signal.
  constexpr double kRadius = 0.5;
  std::vector<Pose> offsets;
  offsets.push_back(Pose::identity());
  for (int k = 0; k < 8; ++k) {
    Pose o;
    o.tx = kRadius * std::cos(k * M_PI / 4.0);
    o.ty = kRadius * std::sin(k * M_PI / 4.0);
    offsets.push_back(o);
  }
  return offsets;
}

EvalConfig::EvalConfig() : offsets(default_offsets()) {}

void EvalConfig::validate() const {
  if (offsets.empty()) {
    throw std::invalid_argument("config: offsets must be nonempty");
  }
  const bool has_identity = std::any_of(offsets.begin(), offsets.end(), [](const Pose& p) {
    return p.tx == 0 && p.ty == 0 && p.tz == 0 && p.roll == 0 && p.pitch == 0 &&
           p.yaw == 0;
  });
  if (!has_identity) {
    throw std::invalid_argument("config: offsets must include the identity");
  }
  if (candidate_ranges.empty() ||
      !std::is_sorted(candidate_ranges.begin(), candidate_ranges.end())) {
    throw std::invalid_argument("config: candidate_ranges must be ascending");
  }
  if (!(subsample_leaf > 0) || !(cell_size > 0) || !(waypoint_spacing > 0)) {
    throw std::invalid_argument("config: leaf, cell_size and spacing must be positive");
  }
  if (gt_range > 0 && gt_range < candidate_ranges.back()) {
    throw std::invalid_argument("config: gt_range must cover the largest candidate");
  }
  if (!(scan_noise_sigma >= 0)) {
    throw std::invalid_argument("config: scan_noise_sigma must be >= 0");
  }
}

double EvalConfig::resolve_gt_range(const PointCloud& scene) const {
  if (gt_range > 0) return gt_range;
  if (scene.empty()) return candidate_ranges.back();
  double lo[3] = {kInf, kInf, kInf};
  double hi[3] = {-kInf, -kInf, -kInf};
  for (const Point& p : scene.points) {
    const double c[3] = {p.x, p.y, p.z};
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], c[a]);
      hi[a] = std::max(hi[a], c[a]);
    }
  }
  const double dx = hi[0] - lo[0], dy = hi[1] - lo[1], dz = hi[2] - lo[2];
  return std::max(std::sqrt(dx * dx + dy * dy + dz * dz), candidate_ranges.back());
}

namespace {

std::pair<std::string, std::string> key_value(const std::string& line) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) {
    throw std::invalid_argument("config: expected 'key = value': " + line);
  }
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  return {trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
}

std::vector<double> parse_number_list(const std::string& value) {
  std::vector<double> out;
  std::istringstream iss(value);
  double v;
  while (iss >> v) out.push_back(v);
  return out;
}

bool parse_bool(const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("config: bad boolean: " + value);
}

}  // namespace

EvalConfig parse_eval_config_text(const std::string& text) {
  EvalConfig config;
  bool offsets_given = false;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto [key, value] = key_value(line);
    if (key == "subsample_leaf") {
      config.subsample_leaf = std::stod(value);
    } else if (key == "cell_size") {
      config.cell_size = std::stod(value);
    } else if (key == "candidate_ranges") {
      config.candidate_ranges = parse_number_list(value);
    } else if (key == "gt_range") {
      config.gt_range = std::stod(value);
    } else if (key == "threshold_cm") {
      config.threshold_cm = std::stod(value);
    } else if (key == "seed") {
      config.seed = std::stoull(value);
    } else if (key == "timing_mode") {
      if (value == "serial") {
        config.timing_mode = EvalConfig::TimingMode::serial;
      } else if (value == "parallel") {
        config.timing_mode = EvalConfig::TimingMode::parallel;
      } else {
        throw std::invalid_argument("config: timing_mode must be serial|parallel");
      }
    } else if (key == "waypoint_spacing") {
      config.waypoint_spacing = std::stod(value);
    } else if (key == "scan_noise_sigma") {
      config.scan_noise_sigma = std::stod(value);
    } else if (key == "range_as_feature") {
      config.range_as_feature = parse_bool(value);
    } else if (key == "offset") {
      const std::vector<double> v = parse_number_list(value);
      if (v.size() != 6) {
        throw std::invalid_argument("config: offset needs 6 numbers: " + value);
      }
      if (!offsets_given) {
        config.offsets.clear();
        offsets_given = true;
      }
      config.offsets.push_back(Pose{v[0], v[1], v[2], v[3], v[4], v[5]});
    } else if (key == "n_trees") {
      config.forest.n_trees = std::stoi(value);
    } else if (key == "max_depth") {
      config.forest.max_depth = std::stoi(value);
    } else if (key == "min_leaf") {
      config.forest.min_leaf = std::stoi(value);
    } else if (key == "features_per_split") {
      config.forest.features_per_split = std::stoi(value);
    } else if (key == "depth_azimuth_bins") {
      config.factor_config.image.azimuth_bins = std::stoi(value);
    } else if (key == "depth_elevation_bins") {
      config.factor_config.image.elevation_bins = std::stoi(value);
    } else if (key == "depth_elevation_min_deg") {
      config.factor_config.image.elevation_min_rad = std::stod(value) * M_PI / 180.0;
    } else if (key == "depth_elevation_max_deg") {
      config.factor_config.image.elevation_max_rad = std::stod(value) * M_PI / 180.0;
    } else if (key == "normal_bins") {
      config.factor_config.normal_bins = std::stoi(value);
    } else if (key == "shift_extent") {
      config.factor_config.shift_grid.extent = std::stod(value);
    } else if (key == "shift_step") {
      config.factor_config.shift_grid.step = std::stod(value);
    } else if (key == "max_iterations") {
      config.reg.max_iterations = std::stoi(value);
    } else {
      throw std::invalid_argument("config: unknown key: " + key);
    }
  }
  config.validate();
  return config;
}

EvalConfig read_eval_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_eval_config_text(buf.str());
}

SplitRng scan_rng(std::uint64_t seed, int waypoint_id) {
  return SplitRng(seed).child(kScanNoiseTag).child(
      static_cast<std::uint64_t>(waypoint_id));
}

PointCloud simulate_scan(const PointCloud& scene, const Pose& sensor_pose,
                         double range, double noise_sigma, SplitRng rng) {
  const Point origin(sensor_pose.tx, sensor_pose.ty, sensor_pose.tz);
  PointCloud scan = apply_pose(crop_range(scene, origin, range), inverse(sensor_pose));
  scan.frame_id = Frame::scan;
  if (noise_sigma > 0) {
    for (Point& p : scan.points) {
      p.x += rng.next_gaussian(noise_sigma);
      p.y += rng.next_gaussian(noise_sigma);
      p.z += rng.next_gaussian(noise_sigma);
    }
  }
  return scan;
}

GroundTruth compute_ground_truth(const NdtMap& map, const PointCloud& scan_sensor,
                                 const Pose& nominal_pose, double gt_range,
                                 const EvalConfig& config) {
  const PointCloud prepared =
      voxel_filter(crop_range(scan_sensor, Point(), gt_range), config.subsample_leaf);
  GroundTruth gt;
  if (prepared.empty()) {
    gt.converged = false;
    gt.pose = nominal_pose;
    return gt;
  }
  gt.registration = register_scan(map, prepared, nominal_pose, config.reg);
  gt.pose = gt.registration.pose;
  gt.converged = gt.registration.converged;
  return gt;
}

namespace {

double rotation_angle_between(const Pose& a, const Pose& b) {
  const Eigen::Matrix3d rel = a.rotation().transpose() * b.rotation();
  const double c = std::clamp(0.5 * (rel.trace() - 1.0), -1.0, 1.0);
  return std::acos(c);
}

}  // namespace

RangeStats evaluate_waypoint(const NdtMap& map, const PointCloud& prepared_scan,
                             const Pose& gt_pose, double range,
                             const EvalConfig& config) {
  RangeStats stats;
  stats.range = range;
  if (prepared_scan.empty()) {
    stats.mean_error_cm = kInf;
    stats.flagged = true;
    stats.diverged = static_cast<int>(config.offsets.size());
    return stats;
  }
  double error_sum = 0.0;
  double rot_sum = 0.0;
  double time_sum = 0.0;
  for (const Pose& offset : config.offsets) {
    const Pose initial = compose(gt_pose, offset);
    const RegistrationResult reg =
        register_scan(map, prepared_scan, initial, config.reg);
    const double error_cm =
        100.0 * (reg.pose.translation() - gt_pose.translation()).norm();
    error_sum += error_cm;
    rot_sum += rotation_angle_between(reg.pose, gt_pose);
    time_sum += reg.matching_time_ms;
    stats.max_time_ms = std::max(stats.max_time_ms, reg.matching_time_ms);
    if (!reg.converged) ++stats.diverged;
  }
  const double n = static_cast<double>(config.offsets.size());
  stats.mean_error_cm = error_sum / n;
  stats.mean_rot_error_rad = rot_sum / n;
  stats.mean_time_ms = time_sum / n;
  if (stats.diverged == static_cast<int>(config.offsets.size())) {
    stats.mean_error_cm = kInf;
    stats.flagged = true;
  }
  return stats;
}

std::vector<WaypointReport> sweep_ranges(const PointCloud& scene,
                                         const Trajectory& trajectory,
                                         const EvalConfig& config) {
  config.validate();
  const double gt_range = config.resolve_gt_range(scene);
  const NdtMap map = build_ndt_map(scene, config.cell_size);

  std::vector<WaypointReport> reports(trajectory.waypoints.size());

  // Factor extraction is pure map lookup work, safe to spread over threads.
  const bool parallel = config.timing_mode == EvalConfig::TimingMode::parallel;
  std::vector<std::future<std::vector<FactorVector>>> factor_jobs;
  auto factors_for = [&](Point position) {
    std::vector<FactorVector> out;
    out.reserve(config.candidate_ranges.size());
    for (double range : config.candidate_ranges) {
      out.push_back(factor_vector(map, position, range, config.factor_config));
    }
    return out;
  };
  if (parallel) {
    factor_jobs.reserve(trajectory.waypoints.size());
    for (const auto& wp : trajectory.waypoints) {
      factor_jobs.push_back(
          std::async(std::launch::async, factors_for, wp.position));
    }
  }

  for (std::size_t w = 0; w < trajectory.waypoints.size(); ++w) {
    const auto& wp = trajectory.waypoints[w];
    WaypointReport& report = reports[w];
    report.waypoint_id = static_cast<int>(w);
    report.position = wp.position;
    report.yaw = wp.yaw;

    Pose nominal;
    nominal.tx = wp.position.x;
    nominal.ty = wp.position.y;
    nominal.tz = wp.position.z;
    nominal.yaw = wp.yaw;

    const PointCloud scan_full =
        simulate_scan(scene, nominal, gt_range, config.scan_noise_sigma,
                      scan_rng(config.seed, report.waypoint_id));
    const GroundTruth gt =
        compute_ground_truth(map, scan_full, nominal, gt_range, config);
    report.gt_pose = gt.pose;
    if (!gt.converged) {
      report.excluded = true;
      continue;
    }

    for (double range : config.candidate_ranges) {
      const PointCloud prepared =
          voxel_filter(crop_range(scan_full, Point(), range), config.subsample_leaf);
      report.per_range.push_back(
          evaluate_waypoint(map, prepared, gt.pose, range, config));
    }
    if (!parallel) {
      report.factors = factors_for(wp.position);
    }
  }
  if (parallel) {
    for (std::size_t w = 0; w < reports.size(); ++w) {
      reports[w].factors = factor_jobs[w].get();
    }
  }
  return reports;
}

ComparisonReport run_dynamic_comparison(const PointCloud& scene,
                                        const Trajectory& trajectory,
                                        const RangeProfile& profile,
                                        const EvalConfig& config) {
  config.validate();
  if (profile.entries.size() != trajectory.waypoints.size()) {
    throw std::invalid_argument("comparison: profile does not match trajectory");
  }
  for (std::size_t w = 0; w < profile.entries.size(); ++w) {
    if (distance(profile.entries[w].position, trajectory.waypoints[w].position) >
        1e-6) {
      throw std::invalid_argument("comparison: profile positions do not match");
    }
  }
  const double gt_range = config.resolve_gt_range(scene);
  const double static_range = profile.candidate_ranges.empty()
                                  ? config.candidate_ranges.back()
                                  : profile.candidate_ranges.back();
  const NdtMap map = build_ndt_map(scene, config.cell_size);

  ComparisonReport report;
  report.static_range_m = static_range;
  report.threshold_cm = profile.threshold_cm;

  double static_time = 0, static_err = 0, dynamic_time = 0, dynamic_err = 0;
  double range_sum = 0;
  int static_ok = 0, dynamic_ok = 0;
  int counted = 0;

  for (std::size_t w = 0; w < trajectory.waypoints.size(); ++w) {
    const auto& wp = trajectory.waypoints[w];
    Pose nominal;
    nominal.tx = wp.position.x;
    nominal.ty = wp.position.y;
    nominal.tz = wp.position.z;
    nominal.yaw = wp.yaw;

    const PointCloud scan_full =
        simulate_scan(scene, nominal, gt_range, config.scan_noise_sigma,
                      scan_rng(config.seed, static_cast<int>(w)));
    const GroundTruth gt =
        compute_ground_truth(map, scan_full, nominal, gt_range, config);
    if (!gt.converged) {
      ++report.excluded_count;
      continue;
    }

    auto evaluate_at = [&](double range) {
      const PointCloud prepared =
          voxel_filter(crop_range(scan_full, Point(), range), config.subsample_leaf);
      return evaluate_waypoint(map, prepared, gt.pose, range, config);
    };

    const double selected = profile.entries[w].selected_range_m;
    const RangeStats dyn = evaluate_at(selected);
    const RangeStats sta = evaluate_at(static_range);

    ++counted;
    range_sum += selected;
    dynamic_time += dyn.mean_time_ms;
    static_time += sta.mean_time_ms;
    dynamic_err += dyn.mean_error_cm;
    static_err += sta.mean_error_cm;
    report.dynamic_side.max_time_ms =
        std::max(report.dynamic_side.max_time_ms, dyn.max_time_ms);
    report.static_side.max_time_ms =
        std::max(report.static_side.max_time_ms, sta.max_time_ms);
    if (dyn.mean_error_cm <= profile.threshold_cm) ++dynamic_ok;
    if (sta.mean_error_cm <= profile.threshold_cm) ++static_ok;
  }

  report.waypoint_count = counted;
  if (counted > 0) {
    const double n = counted;
    report.dynamic_side.mean_time_ms = dynamic_time / n;
    report.static_side.mean_time_ms = static_time / n;
    report.dynamic_side.mean_error_cm = dynamic_err / n;
    report.static_side.mean_error_cm = static_err / n;
    report.dynamic_side.pct_within_threshold = 100.0 * dynamic_ok / n;
    report.static_side.pct_within_threshold = 100.0 * static_ok / n;
    report.mean_selected_range_m = range_sum / n;
  }
  return report;
}

namespace {

const std::vector<std::string> kSweepHeader = {
    "waypoint_id", "x", "y", "z", "yaw", "excluded",
    "gt_tx", "gt_ty", "gt_tz", "gt_roll", "gt_pitch", "gt_yaw",
    "range", "mean_error_cm", "mean_rot_error_rad", "mean_time_ms", "max_time_ms",
    "diverged", "flagged",
    "feature_count", "d1_count", "d2_count", "d3_count",
    "d1_ratio", "d2_ratio", "d3_ratio", "occupancy_ratio", "normal_entropy",
    "r_average", "score_entropy"};

std::vector<std::string> sweep_row(const WaypointReport& report,
                                   const RangeStats& stats, const FactorVector& fv) {
  std::vector<std::string> row = {
      std::to_string(report.waypoint_id),
      format_double(report.position.x),
      format_double(report.position.y),
      format_double(report.position.z),
      format_double(report.yaw),
      report.excluded ? "1" : "0",
      format_double(report.gt_pose.tx),
      format_double(report.gt_pose.ty),
      format_double(report.gt_pose.tz),
      format_double(report.gt_pose.roll),
      format_double(report.gt_pose.pitch),
      format_double(report.gt_pose.yaw),
      format_double(stats.range),
      format_double(stats.mean_error_cm),
      format_double(stats.mean_rot_error_rad),
      format_double(stats.mean_time_ms),
      format_double(stats.max_time_ms),
      std::to_string(stats.diverged),
      stats.flagged ? "1" : "0",
      std::to_string(fv.feature_count),
      std::to_string(fv.d1_count),
      std::to_string(fv.d2_count),
      std::to_string(fv.d3_count),
      format_double(fv.d1_ratio),
      format_double(fv.d2_ratio),
      format_double(fv.d3_ratio),
      format_double(fv.occupancy_ratio),
      format_double(fv.normal_entropy),
      fv.r_average_missing ? std::string() : format_double(fv.r_average),
      format_double(fv.score_entropy)};
  return row;
}

}  // namespace

std::vector<std::filesystem::path> emit_report(
    const std::vector<WaypointReport>& reports, ReportFormat format,
    const std::filesystem::path& out_dir) {
  if (reports.empty()) {
    throw std::invalid_argument("emit_report: no reports");
  }
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;

  if (format == ReportFormat::csv) {
    CsvTable sweep;
    sweep.comments = {"dorloc sweep v1"};
    sweep.header = kSweepHeader;
    for (const WaypointReport& report : reports) {
      if (report.excluded) {
        // keep excluded waypoints visible with an empty per-range block
        std::vector<std::string> row =
            sweep_row(report, RangeStats{}, FactorVector{});
        for (std::size_t i = 12; i < row.size(); ++i) row[i].clear();
        sweep.rows.push_back(std::move(row));
        continue;
      }
      for (std::size_t i = 0; i < report.per_range.size(); ++i) {
        sweep.rows.push_back(
            sweep_row(report, report.per_range[i], report.factors[i]));
      }
    }
    const auto sweep_path = out_dir / "sweep.csv";
    write_csv(sweep_path, sweep);
    written.push_back(sweep_path);

    // route-level aggregates per range, excluded/flagged waypoints counted out
    CsvTable summary;
    summary.comments = {"dorloc route-summary v1"};
    summary.header = {"range", "mean_error_cm", "mean_time_ms", "max_time_ms",
                      "waypoints", "flagged", "excluded"};
    std::map<double, std::vector<const RangeStats*>> by_range;
    int excluded = 0;
    for (const WaypointReport& report : reports) {
      if (report.excluded) {
        ++excluded;
        continue;
      }
      for (const RangeStats& stats : report.per_range) {
        by_range[stats.range].push_back(&stats);
      }
    }
    for (const auto& [range, stats_list] : by_range) {
      double err = 0, time = 0, max_time = 0;
      int flagged = 0, used = 0;
      for (const RangeStats* s : stats_list) {
        if (s->flagged) {
          ++flagged;
          continue;
        }
        ++used;
        err += s->mean_error_cm;
        time += s->mean_time_ms;
        max_time = std::max(max_time, s->max_time_ms);
      }
      summary.rows.push_back(
          {format_double(range),
           used ? format_double(err / used) : std::string(),
           used ? format_double(time / used) : std::string(),
           format_double(max_time), std::to_string(used),
           std::to_string(flagged), std::to_string(excluded)});
    }
    const auto summary_path = out_dir / "route_summary.csv";
    write_csv(summary_path, summary);
    written.push_back(summary_path);
  } else {
    CsvTable plot;
    plot.comments = {"dorloc plotdata v1 (long format)"};
    plot.header = {"metric", "waypoint_id", "range", "value"};
    for (const WaypointReport& report : reports) {
      if (report.excluded) continue;
      const std::string id = std::to_string(report.waypoint_id);
      for (std::size_t i = 0; i < report.per_range.size(); ++i) {
        const RangeStats& s = report.per_range[i];
        const FactorVector& fv = report.factors[i];
        const std::string range = format_double(s.range);
        auto push = [&](const char* metric, double value) {
          plot.rows.push_back({metric, id, range, format_double(value)});
        };
        push("mean_error_cm", s.mean_error_cm);
        push("mean_time_ms", s.mean_time_ms);
        push("max_time_ms", s.max_time_ms);
        push("feature_count", fv.feature_count);
        push("occupancy_ratio", fv.occupancy_ratio);
        push("normal_entropy", fv.normal_entropy);
        if (!fv.r_average_missing) push("r_average", fv.r_average);
        push("score_entropy", fv.score_entropy);
      }
    }
    const auto plot_path = out_dir / "plotdata.csv";
    write_csv(plot_path, plot);
    written.push_back(plot_path);
  }
  return written;
}

std::vector<WaypointReport> read_sweep_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  auto col = [&](const char* name) { return table.column(name); };
  const std::size_t c_id = col("waypoint_id"), c_x = col("x"), c_y = col("y"),
                    c_z = col("z"), c_yaw = col("yaw"), c_excl = col("excluded"),
                    c_range = col("range"), c_err = col("mean_error_cm"),
                    c_rot = col("mean_rot_error_rad"), c_time = col("mean_time_ms"),
                    c_max = col("max_time_ms"), c_div = col("diverged"),
                    c_flag = col("flagged");
  const std::size_t c_gt[6] = {col("gt_tx"),   col("gt_ty"),    col("gt_tz"),
                               col("gt_roll"), col("gt_pitch"), col("gt_yaw")};
  const std::size_t c_fc = col("feature_count"), c_d1 = col("d1_count"),
                    c_d2 = col("d2_count"), c_d3 = col("d3_count"),
                    c_r1 = col("d1_ratio"), c_r2 = col("d2_ratio"),
                    c_r3 = col("d3_ratio"), c_occ = col("occupancy_ratio"),
                    c_ne = col("normal_entropy"), c_ra = col("r_average"),
                    c_se = col("score_entropy");

  std::vector<WaypointReport> reports;
  for (const auto& row : table.rows) {
    const int id = static_cast<int>(parse_double(row[c_id]));
    if (reports.empty() || reports.back().waypoint_id != id) {
      WaypointReport report;
      report.waypoint_id = id;
      report.position =
          Point(parse_double(row[c_x]), parse_double(row[c_y]), parse_double(row[c_z]));
      report.yaw = parse_double(row[c_yaw]);
      report.excluded = row[c_excl] == "1";
      if (!report.excluded) {
        report.gt_pose = Pose{parse_double(row[c_gt[0]]), parse_double(row[c_gt[1]]),
                              parse_double(row[c_gt[2]]), parse_double(row[c_gt[3]]),
                              parse_double(row[c_gt[4]]), parse_double(row[c_gt[5]])};
      }
      reports.push_back(std::move(report));
    }
    WaypointReport& report = reports.back();
    if (report.excluded) continue;
    RangeStats stats;
    stats.range = parse_double(row[c_range]);
    stats.mean_error_cm = parse_double(row[c_err]);
    stats.mean_rot_error_rad = parse_double(row[c_rot]);
    stats.mean_time_ms = parse_double(row[c_time]);
    stats.max_time_ms = parse_double(row[c_max]);
    stats.diverged = static_cast<int>(parse_double(row[c_div]));
    stats.flagged = row[c_flag] == "1";
    report.per_range.push_back(stats);
    FactorVector fv;
    fv.range = stats.range;
    fv.feature_count = static_cast<int>(parse_double(row[c_fc]));
    fv.d1_count = static_cast<int>(parse_double(row[c_d1]));
    fv.d2_count = static_cast<int>(parse_double(row[c_d2]));
    fv.d3_count = static_cast<int>(parse_double(row[c_d3]));
    fv.d1_ratio = parse_double(row[c_r1]);
    fv.d2_ratio = parse_double(row[c_r2]);
    fv.d3_ratio = parse_double(row[c_r3]);
    fv.occupancy_ratio = parse_double(row[c_occ]);
    fv.normal_entropy = parse_double(row[c_ne]);
    if (row[c_ra].empty()) {
      fv.r_average_missing = true;
    } else {
      fv.r_average = parse_double(row[c_ra]);
    }
    fv.score_entropy = parse_double(row[c_se]);
    report.factors.push_back(fv);
  }
  return reports;
}

void write_comparison_csv(const std::filesystem::path& path,
                          const ComparisonReport& report) {
  CsvTable table;
  table.comments = {"dorloc comparison v1",
                    "threshold_cm=" + format_double(report.threshold_cm),
                    "static_range_m=" + format_double(report.static_range_m),
                    "mean_selected_range_m=" +
                        format_double(report.mean_selected_range_m),
                    "waypoints=" + std::to_string(report.waypoint_count),
                    "excluded=" + std::to_string(report.excluded_count)};
  table.header = {"mode", "mean_time_ms", "max_time_ms", "mean_error_cm",
                  "pct_within_threshold"};
  auto row = [&](const char* mode, const ComparisonSide& side) {
    table.rows.push_back({mode, format_double(side.mean_time_ms),
                          format_double(side.max_time_ms),
                          format_double(side.mean_error_cm),
                          format_double(side.pct_within_threshold)});
  };
  row("static", report.static_side);
  row("dynamic", report.dynamic_side);
  write_csv(path, table);
}

namespace {

const std::vector<std::string> kFactorsHeader = {
    "waypoint_id", "range",    "feature_count", "d1_count",
    "d2_count",    "d3_count", "d1_ratio",      "d2_ratio",
    "d3_ratio",    "occupancy_ratio", "normal_entropy", "r_average",
    "score_entropy"};

}  // namespace

void write_factors_csv(const std::filesystem::path& path,
                       const std::vector<WaypointFactors>& rows) {
  CsvTable table;
  table.comments = {"dorloc factors v1"};
  table.header = kFactorsHeader;
  for (const WaypointFactors& wf : rows) {
    for (const FactorVector& fv : wf.factors) {
      table.rows.push_back(
          {std::to_string(wf.waypoint_id), format_double(fv.range),
           std::to_string(fv.feature_count), std::to_string(fv.d1_count),
           std::to_string(fv.d2_count), std::to_string(fv.d3_count),
           format_double(fv.d1_ratio), format_double(fv.d2_ratio),
           format_double(fv.d3_ratio), format_double(fv.occupancy_ratio),
           format_double(fv.normal_entropy),
           fv.r_average_missing ? std::string() : format_double(fv.r_average),
           format_double(fv.score_entropy)});
    }
  }
  write_csv(path, table);
}

std::vector<WaypointFactors> read_factors_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  auto col = [&](const char* name) { return table.column(name); };
  const std::size_t c_id = col("waypoint_id"), c_range = col("range"),
                    c_fc = col("feature_count"), c_d1 = col("d1_count"),
                    c_d2 = col("d2_count"), c_d3 = col("d3_count"),
                    c_r1 = col("d1_ratio"), c_r2 = col("d2_ratio"),
                    c_r3 = col("d3_ratio"), c_occ = col("occupancy_ratio"),
                    c_ne = col("normal_entropy"), c_ra = col("r_average"),
                    c_se = col("score_entropy");
  std::vector<WaypointFactors> out;
  for (const auto& row : table.rows) {
    const int id = static_cast<int>(parse_double(row[c_id]));
    if (out.empty() || out.back().waypoint_id != id) {
      out.push_back({id, {}});
    }
    FactorVector fv;
    fv.range = parse_double(row[c_range]);
    fv.feature_count = static_cast<int>(parse_double(row[c_fc]));
    fv.d1_count = static_cast<int>(parse_double(row[c_d1]));
    fv.d2_count = static_cast<int>(parse_double(row[c_d2]));
    fv.d3_count = static_cast<int>(parse_double(row[c_d3]));
    fv.d1_ratio = parse_double(row[c_r1]);
    fv.d2_ratio = parse_double(row[c_r2]);
    fv.d3_ratio = parse_double(row[c_r3]);
    fv.occupancy_ratio = parse_double(row[c_occ]);
    fv.normal_entropy = parse_double(row[c_ne]);
    if (row[c_ra].empty()) {
      fv.r_average_missing = true;
    } else {
      fv.r_average = parse_double(row[c_ra]);
    }
    fv.score_entropy = parse_double(row[c_se]);
    out.back().factors.push_back(fv);
  }
  return out;
}

AssembledData dataset_from_csv(const std::filesystem::path& factors_path,
                               const std::filesystem::path& errors_path,
                               double range, bool range_as_feature) {
  const std::vector<WaypointFactors> factors = read_factors_csv(factors_path);
  const CsvTable errors = read_csv(errors_path);
  const std::size_t c_id = errors.column("waypoint_id");
  const std::size_t c_range = errors.column("range");
  const std::size_t c_err = errors.column("mean_error_cm");
  std::map<std::pair<int, double>, double> target;
  for (const auto& row : errors.rows) {
    if (row[c_range].empty() || row[c_err].empty()) continue;
    target[{static_cast<int>(parse_double(row[c_id])),
            parse_double(row[c_range])}] = parse_double(row[c_err]);
  }

  AssembledData out;
  out.dataset.feature_names = factor_feature_names(range_as_feature);
  for (const WaypointFactors& wf : factors) {
    for (const FactorVector& fv : wf.factors) {
      if (range > 0 && fv.range != range) continue;
      const auto it = target.find({wf.waypoint_id, fv.range});
      if (it == target.end() || !std::isfinite(it->second)) {
        ++out.dropped_rows;
        continue;
      }
      DataRow row;
      row.features = factor_features(fv, range_as_feature);
      row.target_cm = it->second;
      row.waypoint_id = wf.waypoint_id;
      row.range = fv.range;
      out.dataset.rows.push_back(std::move(row));
    }
  }
  return out;
}

AssembledData assemble_dataset(const std::vector<WaypointReport>& reports,
                               double range, bool range_as_feature) {
  AssembledData out;
  out.dataset.feature_names = factor_feature_names(range_as_feature);
  for (const WaypointReport& report : reports) {
    if (report.excluded) continue;
    for (std::size_t i = 0; i < report.per_range.size(); ++i) {
      const RangeStats& stats = report.per_range[i];
      if (range > 0 && stats.range != range) continue;
      if (!std::isfinite(stats.mean_error_cm)) {
        ++out.dropped_rows;
        continue;
      }
      DataRow row;
      row.features = factor_features(report.factors[i], range_as_feature);
      row.target_cm = stats.mean_error_cm;
      row.waypoint_id = report.waypoint_id;
      row.range = stats.range;
      out.dataset.rows.push_back(std::move(row));
    }
  }
  return out;
}

ErrorModelSet train_models(const std::vector<WaypointReport>& reports,
                           const EvalConfig& config) {
  ErrorModelSet set;
  set.range_as_feature = config.range_as_feature;
  SplitRng seeder = SplitRng(config.seed).child(kTrainTag);
  if (config.range_as_feature) {
    ForestParams params = config.forest;
    params.seed = seeder.next_u64();
    const AssembledData data = assemble_dataset(reports, 0.0, true);
    set.models.push_back(train_forest(data.dataset, params, 0.0));
    return set;
  }
  for (double range : config.candidate_ranges) {
    ForestParams params = config.forest;
    params.seed = seeder.next_u64();
    const AssembledData data = assemble_dataset(reports, range, false);
    set.models.push_back(train_forest(data.dataset, params, range));
  }
  return set;
}

}  // namespace dor
