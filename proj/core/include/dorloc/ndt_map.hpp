#pragma once

#include <cstdint>
#include <filesystem>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "dorloc/cloud.hpp"
#include "dorloc/geometry.hpp"

namespace dor {

/// Cells with fewer points than this are dropped; the sample covariance of
/// a handful of points is not a usable feature.
inline constexpr int kMinPointsPerCell = 5;

/// Smallest eigenvalue kept relative to the largest; flatter cells are
/// clamped so the inverse covariance stays bounded.
inline constexpr double kEigenvalueFloorRatio = 1e-3;

/// Absolute variance floor applied to the largest eigenvalue (1 mm std),
/// so fully degenerate cells still invert.
inline constexpr double kAbsoluteVarianceFloor = 1e-6;

/// One voxel's Gaussian: mean, regularized covariance, and its eigen
/// decomposition with standard deviations in descending order.
struct NdCell {
  Point mean;
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d inverse_covariance = Eigen::Matrix3d::Zero();
  Eigen::Vector3d eigen_sigmas = Eigen::Vector3d::Zero();  // sigma1 >= sigma2 >= sigma3
  Eigen::Matrix3d eigen_axes = Eigen::Matrix3d::Identity(); // columns, matching sigmas
  int point_count = 0;
};

/// Sparse voxel grid of Gaussians, immutable after construction. Cells are
/// stored in ascending cell-index order for deterministic iteration.
struct NdtMap {
  double cell_size = 1.0;
  std::vector<std::pair<CellIndex, NdCell>> cells;

  const NdCell* cell_at(const Point& p) const;
  const NdCell* cell_at_index(const CellIndex& idx) const;
  std::size_t size() const { return cells.size(); }

  /// Rebuilds the lookup table; called by builders/loaders after `cells`
  /// is final.
  void rebuild_index();

 private:
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

/// Regularizes a raw sample covariance: eigenvalues are floored as described
/// above and the matrix is reconstructed. Also derives the inverse and the
/// eigen fields of the cell.
void regularize_cell(NdCell& cell);

NdtMap build_ndt_map(const PointCloud& cloud, double cell_size);

/// Text serialization: one record per cell (index, count, mean, upper
/// triangle of the covariance); exact round trip.
void save_ndt_map(const std::filesystem::path& path, const NdtMap& map);
NdtMap load_ndt_map(const std::filesystem::path& path);

}  // namespace dor
