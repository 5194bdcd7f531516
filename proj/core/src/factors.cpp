#include "dorloc/factors.hpp"

#include <algorithm>
#include <cmath>

#include "dorloc/registration.hpp"

namespace dor {

std::vector<std::pair<double, double>> ShiftGridSpec::shifts() const {
  if (!(step > 0.0) || !(extent >= 0.0)) {
    throw std::invalid_argument("shift grid: step must be positive");
  }
  const long half = std::lround(std::floor(extent / step + 1e-9));
  std::vector<std::pair<double, double>> out;
  out.reserve((2 * half + 1) * (2 * half + 1));
  for (long i = -half; i <= half; ++i) {
    for (long j = -half; j <= half; ++j) {
      out.emplace_back(step * static_cast<double>(i), step * static_cast<double>(j));
    }
  }
  return out;
}

LocalVicinity extract_vicinity(const NdtMap& map, const Point& center, double range) {
  if (!(range > 0.0)) {
    throw std::invalid_argument("extract_vicinity: range must be positive");
  }
  LocalVicinity vicinity;
  vicinity.center = center;
  vicinity.range = range;
  const double r2 = range * range;
  for (const auto& [idx, cell] : map.cells) {
    if (squared_distance(cell.mean, center) <= r2) {
      vicinity.cells.push_back(cell);
    }
  }
  return vicinity;
}

DimensionBehavior dimension_behavior(const NdCell& cell) {
  const double s1 = cell.eigen_sigmas(0);
  const double s2 = cell.eigen_sigmas(1);
  const double s3 = cell.eigen_sigmas(2);
  DimensionBehavior b;
  b.linear = (s1 - s2) / s1;
  b.planar = (s2 - s3) / s1;
  b.spherical = s3 / s1;
  // ties go to the higher dimension
  if (b.spherical >= b.linear && b.spherical >= b.planar) {
    b.klass = DimensionClass::D3;
  } else if (b.planar >= b.linear) {
    b.klass = DimensionClass::D2;
  } else {
    b.klass = DimensionClass::D1;
  }
  return b;
}

DimensionCensus dimension_census(const LocalVicinity& vicinity) {
  DimensionCensus census;
  for (const NdCell& cell : vicinity.cells) {
    switch (dimension_behavior(cell).klass) {
      case DimensionClass::D1: ++census.d1_count; break;
      case DimensionClass::D2: ++census.d2_count; break;
      case DimensionClass::D3: ++census.d3_count; break;
    }
  }
  const int total = static_cast<int>(vicinity.cells.size());
  if (total > 0) {
    census.d1_ratio = static_cast<double>(census.d1_count) / total;
    census.d2_ratio = static_cast<double>(census.d2_count) / total;
    census.d3_ratio = static_cast<double>(census.d3_count) / total;
  }
  return census;
}

double occupancy_ratio(const LocalVicinity& vicinity, const DepthImageSpec& spec) {
  if (spec.azimuth_bins < 1 || spec.elevation_bins < 1) {
    throw std::invalid_argument("occupancy_ratio: image needs >= 1 bin per axis");
  }
  if (!(spec.elevation_max_rad > spec.elevation_min_rad)) {
    throw std::invalid_argument("occupancy_ratio: empty elevation window");
  }
  std::vector<char> occupied(
      static_cast<std::size_t>(spec.azimuth_bins) * spec.elevation_bins, 0);
  const double elev_span = spec.elevation_max_rad - spec.elevation_min_rad;
  for (const NdCell& cell : vicinity.cells) {
    const double dx = cell.mean.x - vicinity.center.x;
    const double dy = cell.mean.y - vicinity.center.y;
    const double dz = cell.mean.z - vicinity.center.z;
    const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
    if (dist <= 0.0) continue;
    const double elevation = std::asin(std::clamp(dz / dist, -1.0, 1.0));
    if (elevation < spec.elevation_min_rad || elevation > spec.elevation_max_rad) {
      continue;
    }
    const double azimuth = std::atan2(dy, dx);  // [-pi, pi]
    int az_bin = static_cast<int>(
        std::floor((azimuth + M_PI) / (2.0 * M_PI) * spec.azimuth_bins));
    az_bin = std::clamp(az_bin, 0, spec.azimuth_bins - 1);
    int el_bin = static_cast<int>(std::floor(
        (elevation - spec.elevation_min_rad) / elev_span * spec.elevation_bins));
    el_bin = std::clamp(el_bin, 0, spec.elevation_bins - 1);
    occupied[static_cast<std::size_t>(el_bin) * spec.azimuth_bins + az_bin] = 1;
  }
  const std::size_t count =
      static_cast<std::size_t>(std::count(occupied.begin(), occupied.end(), 1));
  return static_cast<double>(count) / static_cast<double>(occupied.size());
}

namespace {

double histogram_entropy_bits(const std::vector<long>& counts) {
  long total = 0;
  for (long c : counts) total += c;
  if (total <= 0) return 0.0;
  double entropy = 0.0;
  for (long c : counts) {
    if (c <= 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    entropy -= p * std::log2(p);
  }
  return entropy;
}

}  // namespace

double normal_entropy(const LocalVicinity& vicinity, int bins) {
  if (bins < 2) {
    throw std::invalid_argument("normal_entropy: bins must be >= 2");
  }
  std::vector<long> histogram(bins, 0);
  for (const NdCell& cell : vicinity.cells) {
    if (dimension_behavior(cell).klass != DimensionClass::D2) continue;
    const Eigen::Vector3d normal = cell.eigen_axes.col(2);  // smallest-sigma axis
    double azimuth = std::fmod(std::atan2(normal.y(), normal.x()), M_PI);
    if (azimuth < 0.0) azimuth += M_PI;  // fold to [0, pi)
    int bin = static_cast<int>(std::floor(azimuth / M_PI * bins));
    bin = std::clamp(bin, 0, bins - 1);
    ++histogram[bin];
  }
  return histogram_entropy_bits(histogram);
}

double r_average(const LocalVicinity& vicinity) {
  if (vicinity.cells.empty()) {
    throw UndefinedFactor("r_average: empty vicinity");
  }
  double sum = 0.0;
  for (const NdCell& cell : vicinity.cells) {
    sum += distance(cell.mean, vicinity.center);
  }
  return sum / static_cast<double>(vicinity.cells.size());
}

double score_entropy(const NdtMap& map, const Point& center, double range,
                     const ShiftGridSpec& spec) {
  const std::vector<std::pair<double, double>> shifts = spec.shifts();

  // Map restricted to the vicinity.
  NdtMap submap;
  submap.cell_size = map.cell_size;
  const double r2 = range * range;
  for (const auto& entry : map.cells) {
    if (squared_distance(entry.second.mean, center) <= r2) {
      submap.cells.push_back(entry);
    }
  }
  submap.rebuild_index();

  // Deterministic pseudo-scan: each cell contributes its mean plus sigma
  // points along the two largest eigen axes.
  PointCloud pseudo;
  pseudo.frame_id = Frame::scan;
  for (const auto& [idx, cell] : submap.cells) {
    const Eigen::Vector3d mean = cell.mean.vec();
    pseudo.points.push_back(cell.mean);
    for (int axis = 0; axis < 2; ++axis) {
      const Eigen::Vector3d offset =
          cell.eigen_sigmas(axis) * cell.eigen_axes.col(axis);
      pseudo.points.push_back(Point::from_vec(mean + offset));
      pseudo.points.push_back(Point::from_vec(mean - offset));
    }
  }

  std::vector<double> scores;
  scores.reserve(shifts.size());
  double total = 0.0;
  for (const auto& [sx, sy] : shifts) {
    Pose shift;
    shift.tx = sx;
    shift.ty = sy;
    const double s = pseudo.empty() ? 0.0 : ndt_score(submap, pseudo, shift);
    scores.push_back(s);
    total += s;
  }

  if (total <= 0.0) {
    return std::log2(static_cast<double>(shifts.size()));
  }
  double entropy = 0.0;
  for (double s : scores) {
    if (s <= 0.0) continue;
    const double p = s / total;
    entropy -= p * std::log2(p);
  }
  return entropy;
}

FactorVector factor_vector(const NdtMap& map, const Point& center, double range,
                           const FactorConfig& config) {
  if (!(range > 0.0)) {
    throw std::invalid_argument("factor_vector: range must be positive");
  }
  const LocalVicinity vicinity = extract_vicinity(map, center, range);
  FactorVector fv;
  fv.range = range;
  fv.feature_count = static_cast<int>(vicinity.cells.size());
  const DimensionCensus census = dimension_census(vicinity);
  fv.d1_count = census.d1_count;
  fv.d2_count = census.d2_count;
  fv.d3_count = census.d3_count;
  fv.d1_ratio = census.d1_ratio;
  fv.d2_ratio = census.d2_ratio;
  fv.d3_ratio = census.d3_ratio;
  fv.occupancy_ratio = occupancy_ratio(vicinity, config.image);
  fv.normal_entropy = normal_entropy(vicinity, config.normal_bins);
  try {
    fv.r_average = r_average(vicinity);
  } catch (const UndefinedFactor&) {
    fv.r_average = 0.0;
    fv.r_average_missing = true;
  }
  fv.score_entropy = score_entropy(map, center, range, config.shift_grid);
  return fv;
}

}  // namespace dor
