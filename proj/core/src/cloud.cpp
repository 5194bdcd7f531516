#include "dorloc/cloud.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace dor {

CellIndex cell_index_of(const Point& p, double cell) {
  return CellIndex{
      static_cast<std::int32_t>(std::floor(p.x / cell)),
      static_cast<std::int32_t>(std::floor(p.y / cell)),
      static_cast<std::int32_t>(std::floor(p.z / cell)),
  };
}

namespace {
constexpr std::int32_t kAxisBias = 1 << 20;  // keys cover |index| < 2^20
}

std::uint64_t pack_cell_index(const CellIndex& idx) {
  const auto bx = static_cast<std::uint64_t>(idx.ix + kAxisBias);
  const auto by = static_cast<std::uint64_t>(idx.iy + kAxisBias);
  const auto bz = static_cast<std::uint64_t>(idx.iz + kAxisBias);
  return (bx << 42) | (by << 21) | bz;
}

CellIndex unpack_cell_index(std::uint64_t key) {
  constexpr std::uint64_t mask = (1u << 21) - 1;
  return CellIndex{
      static_cast<std::int32_t>((key >> 42) & mask) - kAxisBias,
      static_cast<std::int32_t>((key >> 21) & mask) - kAxisBias,
      static_cast<std::int32_t>(key & mask) - kAxisBias,
  };
}

PointCloud voxel_filter(const PointCloud& cloud, double leaf) {
  if (!(leaf > 0.0)) {
    throw std::invalid_argument("voxel_filter: leaf must be positive");
  }
  struct Accum {
    double sx = 0, sy = 0, sz = 0;
    std::size_t n = 0;
  };
  std::unordered_map<std::uint64_t, Accum> cells;
  cells.reserve(cloud.size());
  for (const Point& p : cloud.points) {
    Accum& a = cells[pack_cell_index(cell_index_of(p, leaf))];
    a.sx += p.x;
    a.sy += p.y;
    a.sz += p.z;
    a.n += 1;
  }
  std::vector<std::pair<std::uint64_t, Accum>> ordered(cells.begin(), cells.end());
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  PointCloud out;
  out.frame_id = cloud.frame_id;
  out.points.reserve(ordered.size());
  for (const auto& [key, a] : ordered) {
    const double inv = 1.0 / static_cast<double>(a.n);
    out.points.emplace_back(a.sx * inv, a.sy * inv, a.sz * inv);
  }
  return out;
}

PointCloud crop_range(const PointCloud& cloud, const Point& center, double range) {
  if (!(range > 0.0)) {
    throw std::invalid_argument("crop_range: range must be positive");
  }
  const double r2 = range * range;
  PointCloud out;
  out.frame_id = cloud.frame_id;
  for (const Point& p : cloud.points) {
    if (squared_distance(p, center) <= r2) {
      out.points.push_back(p);
    }
  }
  return out;
}

PointCloud apply_pose(const PointCloud& cloud, const Pose& pose) {
  const Eigen::Matrix3d r = pose.rotation();
  const Eigen::Vector3d t = pose.translation();
  PointCloud out;
  out.frame_id = cloud.frame_id;
  out.points.reserve(cloud.size());
  for (const Point& p : cloud.points) {
    out.points.push_back(Point::from_vec(r * p.vec() + t));
  }
  return out;
}

PointCloud read_cloud(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open cloud file: " + path.string());
  }
  PointCloud cloud;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') {
      continue;
    }
    std::istringstream iss(line);
    double x, y, z;
    if (!(iss >> x >> y >> z)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": malformed point line");
    }
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": non-finite coordinate");
    }
    cloud.points.emplace_back(x, y, z);
  }
  return cloud;
}

void write_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write cloud file: " + path.string());
  }
  char buf[128];
  for (const Point& p : cloud.points) {
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", p.x, p.y, p.z);
    out << buf;
  }
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

}  // namespace dor
