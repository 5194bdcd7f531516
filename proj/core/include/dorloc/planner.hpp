#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include "dorloc/forest.hpp"
#include "dorloc/ndt_map.hpp"
#include "dorloc/scene.hpp"

namespace dor {

/// Per-range error models, or a single range-as-feature model covering all
/// candidate ranges.
struct ErrorModelSet {
  bool range_as_feature = false;
  std::vector<ForestModel> models;  // one per candidate range, ascending

  double predict_cm(const FactorVector& fv) const;
};

struct PlanDecision {
  double range_m = 0.0;
  double predicted_error_cm = 0.0;
  bool satisfied = false;
};

/// Shortest candidate whose predicted error meets the threshold; if none
/// qualifies, the largest candidate with satisfied = false. Candidates with
/// no prediction count as +infinity.
PlanDecision plan_range(const std::map<double, double>& predicted_cm_by_range,
                        double threshold_cm, const std::vector<double>& candidates);

struct RangeProfileEntry {
  int waypoint_id = 0;
  Point position;
  double selected_range_m = 0.0;
  double predicted_error_cm = 0.0;
  bool satisfied = false;
};

/// The planner's embedded-in-map product: per-waypoint selected range and
/// predicted error.
struct RangeProfile {
  std::vector<RangeProfileEntry> entries;  // in waypoint order
  double threshold_cm = 0.0;
  std::vector<double> candidate_ranges;    // ascending
};

RangeProfile build_range_profile(const ErrorModelSet& models, const NdtMap& map,
                                 const Trajectory& trajectory, double threshold_cm,
                                 const std::vector<double>& candidates,
                                 const FactorConfig& config = {});

/// Selected range of the nearest entry (Euclidean); ties go to the lower
/// waypoint id. Throws on an empty profile.
double lookup_range(const RangeProfile& profile, const Point& position);

/// CSV: waypoint_id, x, y, z, selected_range_m, predicted_error_cm, satisfied.
void write_profile(const std::filesystem::path& path, const RangeProfile& profile);
RangeProfile read_profile(const std::filesystem::path& path);

}  // namespace dor
