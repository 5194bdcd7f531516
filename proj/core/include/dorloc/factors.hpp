#pragma once

#include <stdexcept>
#include <vector>

#include "dorloc/geometry.hpp"
#include "dorloc/ndt_map.hpp"

namespace dor {

/// Thrown when a factor has no defined value (e.g. mean feature distance of
/// an empty vicinity). Callers assembling factor tables treat it as a
/// flagged missing value.
class UndefinedFactor : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The map cells whose means lie within `range` of `center` (inclusive).
struct LocalVicinity {
  Point center;
  double range = 0.0;
  std::vector<NdCell> cells;
};

enum class DimensionClass { D1, D2, D3 };

/// Eigen-spectrum shape of one cell: how line-, plane- or blob-like it is.
/// The three components always sum to 1.
struct DimensionBehavior {
  double linear = 0.0;     // (sigma1 - sigma2) / sigma1
  double planar = 0.0;     // (sigma2 - sigma3) / sigma1
  double spherical = 0.0;  // sigma3 / sigma1
  DimensionClass klass = DimensionClass::D3;
};

struct DimensionCensus {
  int d1_count = 0;
  int d2_count = 0;
  int d3_count = 0;
  double d1_ratio = 0.0;
  double d2_ratio = 0.0;
  double d3_ratio = 0.0;
};

/// Vehicle-centered spherical depth image used for the occupancy ratio.
struct DepthImageSpec {
  int azimuth_bins = 180;
  int elevation_bins = 20;
  double elevation_min_rad = -10.0 * M_PI / 180.0;
  double elevation_max_rad = 30.0 * M_PI / 180.0;
};

/// Grid of planar shifts for the self-registration score; always includes
/// (0, 0). Defaults give an 11 x 11 grid.
struct ShiftGridSpec {
  double extent = 1.0;  // meters, per axis
  double step = 0.2;    // meters

  std::vector<std::pair<double, double>> shifts() const;
};

struct FactorConfig {
  DepthImageSpec image;
  int normal_bins = 18;
  ShiftGridSpec shift_grid;
};

/// Per-(location, range) map factors feeding the error regressor.
struct FactorVector {
  double range = 0.0;
  int feature_count = 0;
  int d1_count = 0;
  int d2_count = 0;
  int d3_count = 0;
  double d1_ratio = 0.0;
  double d2_ratio = 0.0;
  double d3_ratio = 0.0;
  double occupancy_ratio = 0.0;
  double normal_entropy = 0.0;  // bits
  double r_average = 0.0;       // meters; valid only when !r_average_missing
  bool r_average_missing = false;
  double score_entropy = 0.0;   // bits
};

LocalVicinity extract_vicinity(const NdtMap& map, const Point& center, double range);

DimensionBehavior dimension_behavior(const NdCell& cell);

DimensionCensus dimension_census(const LocalVicinity& vicinity);

/// Fraction of depth-image pixels covered by at least one cell mean.
double occupancy_ratio(const LocalVicinity& vicinity, const DepthImageSpec& spec);

/// Entropy of the folded-azimuth histogram of plane-like cells' normals;
/// 0 when the vicinity has no plane-like cell. `bins` must be >= 2.
double normal_entropy(const LocalVicinity& vicinity, int bins);

/// Mean distance from the center to the cell means; throws UndefinedFactor
/// on an empty vicinity.
double r_average(const LocalVicinity& vicinity);

/// Entropy of the normalized self-registration score over the shift grid.
/// An all-zero score row falls back to the uniform distribution.
double score_entropy(const NdtMap& map, const Point& center, double range,
                     const ShiftGridSpec& spec);

FactorVector factor_vector(const NdtMap& map, const Point& center, double range,
                           const FactorConfig& config = {});

}  // namespace dor
