#include "dorloc/ndt_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "dorloc/csv.hpp"

namespace dor {

void NdtMap::rebuild_index() {
  index_.clear();
  index_.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    index_.emplace(pack_cell_index(cells[i].first), i);
  }
}

const NdCell* NdtMap::cell_at_index(const CellIndex& idx) const {
  const auto it = index_.find(pack_cell_index(idx));
  return it == index_.end() ? nullptr : &cells[it->second].second;
}

const NdCell* NdtMap::cell_at(const Point& p) const {
  return cell_at_index(cell_index_of(p, cell_size));
}

void regularize_cell(NdCell& cell) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cell.covariance);
  Eigen::Vector3d lambda = solver.eigenvalues();   // ascending
  Eigen::Matrix3d axes = solver.eigenvectors();

  double max_lambda = std::max(lambda(2), kAbsoluteVarianceFloor);
  const double floor = kEigenvalueFloorRatio * max_lambda;
  lambda(2) = max_lambda;
  lambda(1) = std::clamp(lambda(1), floor, max_lambda);
  lambda(0) = std::clamp(lambda(0), floor, max_lambda);

  // mirror the upper triangle so the matrices are exactly symmetric
  auto symmetric = [](const Eigen::Matrix3d& m) {
    Eigen::Matrix3d s = m;
    s(1, 0) = s(0, 1);
    s(2, 0) = s(0, 2);
    s(2, 1) = s(1, 2);
    return s;
  };
  cell.covariance = symmetric(axes * lambda.asDiagonal() * axes.transpose());
  cell.inverse_covariance =
      symmetric(axes * lambda.cwiseInverse().asDiagonal() * axes.transpose());
  // descending order for sigmas and their axes
  cell.eigen_sigmas = Eigen::Vector3d(std::sqrt(lambda(2)), std::sqrt(lambda(1)),
                                      std::sqrt(lambda(0)));
  cell.eigen_axes.col(0) = axes.col(2);
  cell.eigen_axes.col(1) = axes.col(1);
  cell.eigen_axes.col(2) = axes.col(0);
}

NdtMap build_ndt_map(const PointCloud& cloud, double cell_size) {
  if (!(cell_size > 0.0)) {
    throw std::invalid_argument("build_ndt_map: cell_size must be positive");
  }
  struct Accum {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    std::vector<Eigen::Vector3d> pts;
  };
  std::unordered_map<std::uint64_t, Accum> accum;
  for (const Point& p : cloud.points) {
    Accum& a = accum[pack_cell_index(cell_index_of(p, cell_size))];
    a.sum += p.vec();
    a.pts.push_back(p.vec());
  }

  NdtMap map;
  map.cell_size = cell_size;
  map.cells.reserve(accum.size());
  for (const auto& [key, a] : accum) {
    const int n = static_cast<int>(a.pts.size());
    if (n < kMinPointsPerCell) continue;
    NdCell cell;
    cell.point_count = n;
    const Eigen::Vector3d mean = a.sum / static_cast<double>(n);
    cell.mean = Point::from_vec(mean);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Eigen::Vector3d& p : a.pts) {
      const Eigen::Vector3d d = p - mean;
      cov += d * d.transpose();
    }
    cell.covariance = cov / static_cast<double>(n - 1);
    regularize_cell(cell);
    map.cells.emplace_back(unpack_cell_index(key), cell);
  }
  std::sort(map.cells.begin(), map.cells.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  map.rebuild_index();
  return map;
}

void save_ndt_map(const std::filesystem::path& path, const NdtMap& map) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write NDT map: " + path.string());
  }
  out << "# dorloc ndt-map v1\n";
  out << "cell_size " << format_double(map.cell_size) << "\n";
  for (const auto& [idx, cell] : map.cells) {
    out << "cell " << idx.ix << ' ' << idx.iy << ' ' << idx.iz << ' '
        << cell.point_count << ' ' << format_double(cell.mean.x) << ' '
        << format_double(cell.mean.y) << ' ' << format_double(cell.mean.z);
    const Eigen::Matrix3d& c = cell.covariance;
    for (const auto [r, col] :
         {std::pair{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}}) {
      out << ' ' << format_double(c(r, col));
    }
    out << '\n';
  }
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

NdtMap load_ndt_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open NDT map: " + path.string());
  }
  NdtMap map;
  std::string line;
  std::size_t line_no = 0;
  bool have_cell_size = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream iss(line);
    std::string tag;
    iss >> tag;
    if (tag == "cell_size") {
      if (!(iss >> map.cell_size) || !(map.cell_size > 0.0)) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": bad cell_size");
      }
      have_cell_size = true;
    } else if (tag == "cell") {
      CellIndex idx;
      NdCell cell;
      double c00, c01, c02, c11, c12, c22;
      if (!(iss >> idx.ix >> idx.iy >> idx.iz >> cell.point_count >> cell.mean.x >>
            cell.mean.y >> cell.mean.z >> c00 >> c01 >> c02 >> c11 >> c12 >> c22)) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": malformed cell record");
      }
      cell.covariance << c00, c01, c02, c01, c11, c12, c02, c12, c22;
      // keep the stored covariance; derive inverse and eigen fields from it
      const Eigen::Matrix3d stored = cell.covariance;
      regularize_cell(cell);
      cell.covariance = stored;
      map.cells.emplace_back(idx, cell);
    } else {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": unknown record '" + tag + "'");
    }
  }
  if (!have_cell_size) {
    throw std::runtime_error(path.string() + ": missing cell_size record");
  }
  std::sort(map.cells.begin(), map.cells.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  map.rebuild_index();
  return map;
}

}  // namespace dor
