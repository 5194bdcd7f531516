#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dorloc/geometry.hpp"

namespace dor {

enum class Frame { scan, map };

/// Ordered point sequence. May be empty.
struct PointCloud {
  std::vector<Point> points;
  Frame frame_id = Frame::map;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Integer grid cell index with the world origin as grid origin:
/// floor(coord / cell) per axis.
struct CellIndex {
  std::int32_t ix = 0;
  std::int32_t iy = 0;
  std::int32_t iz = 0;

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

CellIndex cell_index_of(const Point& p, double cell);

/// Packs a cell index into a single key (21 bits per axis).
std::uint64_t pack_cell_index(const CellIndex& idx);
CellIndex unpack_cell_index(std::uint64_t key);

/// Regular-grid subsampling: one point per occupied cell, at the centroid of
/// the cell's input points. Output is ordered by ascending cell index.
PointCloud voxel_filter(const PointCloud& cloud, double leaf);

/// Keeps exactly the points with distance(p, center) <= range. Order is
/// preserved.
PointCloud crop_range(const PointCloud& cloud, const Point& center, double range);

/// Rotates (Rz*Ry*Rx) then translates every point.
PointCloud apply_pose(const PointCloud& cloud, const Pose& pose);

/// ASCII cloud file: one "x y z" triple per line, '#'-prefixed comments
/// allowed. Coordinates are stored with 9 significant digits.
PointCloud read_cloud(const std::filesystem::path& path);
void write_cloud(const std::filesystem::path& path, const PointCloud& cloud);

}  // namespace dor
