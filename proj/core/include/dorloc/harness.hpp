#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dorloc/cloud.hpp"
#include "dorloc/factors.hpp"
#include "dorloc/forest.hpp"
#include "dorloc/geometry.hpp"
#include "dorloc/ndt_map.hpp"
#include "dorloc/planner.hpp"
#include "dorloc/registration.hpp"
#include "dorloc/rng.hpp"
#include "dorloc/scene.hpp"

namespace dor {

struct EvalConfig {
  enum class TimingMode { serial, parallel };

  double subsample_leaf = 0.5;  // meters, pre-registration voxel filter
  double cell_size = 1.0;       // meters, NDT map resolution
  std::vector<Pose> offsets;    // initial-guess perturbations; includes identity
  std::vector<double> candidate_ranges = {10, 15, 20, 25, 30, 35, 40, 45, 50};
  double gt_range = 0.0;        // meters; <= 0 resolves to the scene extent
  double threshold_cm = 10.0;
  std::uint64_t seed = 1;
  TimingMode timing_mode = TimingMode::serial;
  double waypoint_spacing = 4.0;   // meters between trajectory waypoints
  double scan_noise_sigma = 0.02;  // meters, independent per-scan noise
  bool range_as_feature = false;   // one model over all ranges instead of per range
  ForestParams forest;             // seed is derived from `seed`
  FactorConfig factor_config;
  RegConfig reg;

  static std::vector<Pose> default_offsets();  // identity + 8 planar at 1 m

  EvalConfig();
  void validate() const;

  /// gt_range if set, else the bounding-box diagonal of the scene cloud.
  double resolve_gt_range(const PointCloud& scene) const;
};

/// Config file: '#' comments, "key = value" lines; `offset` lines repeat.
EvalConfig parse_eval_config_text(const std::string& text);
EvalConfig read_eval_config(const std::filesystem::path& path);

/// Sensor-frame scan at a pose: range crop of the scene around the sensor,
/// moved to the sensor frame, plus independent Gaussian noise.
PointCloud simulate_scan(const PointCloud& scene, const Pose& sensor_pose,
                         double range, double noise_sigma, SplitRng rng);

/// Deterministic per-(seed, waypoint) scan noise stream.
SplitRng scan_rng(std::uint64_t seed, int waypoint_id);

struct GroundTruth {
  Pose pose;
  bool converged = false;
  RegistrationResult registration;
};

/// Registers the gt_range-cropped, subsampled scan from the nominal pose.
/// A non-converged result marks the waypoint excluded upstream.
GroundTruth compute_ground_truth(const NdtMap& map, const PointCloud& scan_sensor,
                                 const Pose& nominal_pose, double gt_range,
                                 const EvalConfig& config);

struct RangeStats {
  double range = 0.0;
  double mean_error_cm = 0.0;      // +inf sentinel when every offset diverged
  double mean_rot_error_rad = 0.0; // logged, never thresholded
  double mean_time_ms = 0.0;
  double max_time_ms = 0.0;
  int diverged = 0;                // offsets whose registration did not converge
  bool flagged = false;            // all offsets diverged
};

/// Registers from gt ∘ offset for every configured offset; errors are 3D
/// Euclidean position distances to the ground truth. The scan must already
/// be cropped to `range` and subsampled.
RangeStats evaluate_waypoint(const NdtMap& map, const PointCloud& prepared_scan,
                             const Pose& gt_pose, double range,
                             const EvalConfig& config);

struct WaypointReport {
  int waypoint_id = 0;
  Point position;
  double yaw = 0.0;
  bool excluded = false;  // ground truth did not converge
  Pose gt_pose;
  std::vector<RangeStats> per_range;
  std::vector<FactorVector> factors;  // aligned with per_range
};

/// Full per-waypoint x per-range evaluation (errors, timings, factors).
/// Registrations always run serially; parallel timing mode only spreads the
/// factor extraction across threads.
std::vector<WaypointReport> sweep_ranges(const PointCloud& scene,
                                         const Trajectory& trajectory,
                                         const EvalConfig& config);

struct ComparisonSide {
  double mean_time_ms = 0.0;
  double max_time_ms = 0.0;
  double mean_error_cm = 0.0;
  double pct_within_threshold = 0.0;
};

struct ComparisonReport {
  ComparisonSide static_side;
  ComparisonSide dynamic_side;
  double static_range_m = 0.0;
  double mean_selected_range_m = 0.0;
  double threshold_cm = 0.0;
  int waypoint_count = 0;
  int excluded_count = 0;
};

/// Evaluates every waypoint at its profile range and at the static maximum
/// range, serially.
ComparisonReport run_dynamic_comparison(const PointCloud& scene,
                                        const Trajectory& trajectory,
                                        const RangeProfile& profile,
                                        const EvalConfig& config);

enum class ReportFormat { csv, plotdata };

/// Writes sweep.csv + route_summary.csv (csv) or plotdata.csv (plotdata)
/// under out_dir; returns the written paths. Throws on empty reports.
std::vector<std::filesystem::path> emit_report(
    const std::vector<WaypointReport>& reports, ReportFormat format,
    const std::filesystem::path& out_dir);

std::vector<WaypointReport> read_sweep_csv(const std::filesystem::path& path);
void write_comparison_csv(const std::filesystem::path& path,
                          const ComparisonReport& report);

/// Factors CSV: waypoint_id, range, then one column per factor; missing
/// values are empty fields.
struct WaypointFactors {
  int waypoint_id = 0;
  std::vector<FactorVector> factors;
};
void write_factors_csv(const std::filesystem::path& path,
                       const std::vector<WaypointFactors>& rows);
std::vector<WaypointFactors> read_factors_csv(const std::filesystem::path& path);

/// Rows for the error regressor; rows with a non-finite target (flagged
/// waypoints) are dropped and counted, never zeroed.
struct AssembledData {
  Dataset dataset;
  int dropped_rows = 0;
};
AssembledData assemble_dataset(const std::vector<WaypointReport>& reports,
                               double range, bool range_as_feature);

/// Joins a factors CSV with an errors CSV (any CSV carrying waypoint_id,
/// range and mean_error_cm columns, e.g. sweep.csv) into training rows.
AssembledData dataset_from_csv(const std::filesystem::path& factors_path,
                               const std::filesystem::path& errors_path,
                               double range, bool range_as_feature);

/// Trains the per-range models (or the single range-as-feature model) on a
/// sweep's reports.
ErrorModelSet train_models(const std::vector<WaypointReport>& reports,
                           const EvalConfig& config);

}  // namespace dor
