#include "dorloc/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dorloc/csv.hpp"

namespace dor {

double ErrorModelSet::predict_cm(const FactorVector& fv) const {
  if (models.empty()) {
    throw std::invalid_argument("ErrorModelSet: no models");
  }
  if (range_as_feature) {
    return predict_error(models.front(), fv);
  }
  for (const ForestModel& model : models) {
    if (model.range_m == fv.range) {
      return predict_error(model, fv);
    }
  }
  throw std::invalid_argument("ErrorModelSet: no model for range " +
                              std::to_string(fv.range));
}

PlanDecision plan_range(const std::map<double, double>& predicted_cm_by_range,
                        double threshold_cm, const std::vector<double>& candidates) {
  if (candidates.empty()) {
    throw std::invalid_argument("plan_range: empty candidate set");
  }
  auto predicted = [&](double range) {
    const auto it = predicted_cm_by_range.find(range);
    if (it == predicted_cm_by_range.end() || std::isnan(it->second)) {
      return std::numeric_limits<double>::infinity();
    }
    return it->second;
  };
  for (double range : candidates) {
    const double err = predicted(range);
    if (err <= threshold_cm) {
      return {range, err, true};
    }
  }
  const double largest = candidates.back();
  return {largest, predicted(largest), false};
}

RangeProfile build_range_profile(const ErrorModelSet& models, const NdtMap& map,
                                 const Trajectory& trajectory, double threshold_cm,
                                 const std::vector<double>& candidates,
                                 const FactorConfig& config) {
  if (candidates.empty()) {
    throw std::invalid_argument("build_range_profile: empty candidate set");
  }
  if (!std::is_sorted(candidates.begin(), candidates.end())) {
    throw std::invalid_argument("build_range_profile: candidates must ascend");
  }
  if (!models.range_as_feature && models.models.size() != candidates.size()) {
    throw std::invalid_argument(
        "build_range_profile: need one model per candidate range");
  }

  RangeProfile profile;
  profile.threshold_cm = threshold_cm;
  profile.candidate_ranges = candidates;
  profile.entries.reserve(trajectory.waypoints.size());
  for (std::size_t w = 0; w < trajectory.waypoints.size(); ++w) {
    const Point& position = trajectory.waypoints[w].position;
    std::map<double, double> predicted;
    for (double range : candidates) {
      const FactorVector fv = factor_vector(map, position, range, config);
      predicted[range] = models.predict_cm(fv);
    }
    const PlanDecision decision = plan_range(predicted, threshold_cm, candidates);
    profile.entries.push_back({static_cast<int>(w), position, decision.range_m,
                               decision.predicted_error_cm, decision.satisfied});
  }
  return profile;
}

double lookup_range(const RangeProfile& profile, const Point& position) {
  if (profile.entries.empty()) {
    throw std::invalid_argument("lookup_range: empty profile");
  }
  const RangeProfileEntry* best = &profile.entries.front();
  double best_d2 = squared_distance(best->position, position);
  for (const RangeProfileEntry& entry : profile.entries) {
    const double d2 = squared_distance(entry.position, position);
    if (d2 < best_d2) {  // ties keep the lower waypoint id
      best = &entry;
      best_d2 = d2;
    }
  }
  return best->selected_range_m;
}

void write_profile(const std::filesystem::path& path, const RangeProfile& profile) {
  CsvTable table;
  table.comments = {"dorloc range-profile v1",
                    "threshold_cm=" + format_double(profile.threshold_cm)};
  std::string ranges = "candidate_ranges=";
  for (std::size_t i = 0; i < profile.candidate_ranges.size(); ++i) {
    ranges += (i ? " " : "") + format_double(profile.candidate_ranges[i]);
  }
  table.comments.push_back(ranges);
  table.header = {"waypoint_id", "x", "y", "z", "selected_range_m",
                  "predicted_error_cm", "satisfied"};
  for (const RangeProfileEntry& e : profile.entries) {
    table.rows.push_back({std::to_string(e.waypoint_id), format_double(e.position.x),
                          format_double(e.position.y), format_double(e.position.z),
                          format_double(e.selected_range_m),
                          format_double(e.predicted_error_cm),
                          e.satisfied ? "1" : "0"});
  }
  write_csv(path, table);
}

RangeProfile read_profile(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  RangeProfile profile;
  for (const std::string& comment : table.comments) {
    if (comment.starts_with("threshold_cm=")) {
      profile.threshold_cm = parse_double(comment.substr(13));
    } else if (comment.starts_with("candidate_ranges=")) {
      std::string rest = comment.substr(17);
      std::size_t pos = 0;
      while (pos < rest.size()) {
        const std::size_t next = rest.find(' ', pos);
        const std::string tok = rest.substr(pos, next - pos);
        if (!tok.empty()) profile.candidate_ranges.push_back(parse_double(tok));
        if (next == std::string::npos) break;
        pos = next + 1;
      }
    }
  }
  const std::size_t id = table.column("waypoint_id");
  const std::size_t cx = table.column("x");
  const std::size_t cy = table.column("y");
  const std::size_t cz = table.column("z");
  const std::size_t cr = table.column("selected_range_m");
  const std::size_t ce = table.column("predicted_error_cm");
  const std::size_t cs = table.column("satisfied");
  for (const auto& row : table.rows) {
    RangeProfileEntry e;
    e.waypoint_id = static_cast<int>(parse_double(row[id]));
    e.position = Point(parse_double(row[cx]), parse_double(row[cy]),
                       parse_double(row[cz]));
    e.selected_range_m = parse_double(row[cr]);
    e.predicted_error_cm = parse_double(row[ce]);
    e.satisfied = row[cs] == "1";
    profile.entries.push_back(e);
  }
  return profile;
}

}  // namespace dor
