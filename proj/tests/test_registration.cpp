#include <doctest.h>

#include <chrono>
#include <cmath>

#include <Eigen/Dense>

#include "dorloc/registration.hpp"
#include "dorloc/rng.hpp"
#include "oracles.hpp"
#include "test_scenes.hpp"

using namespace dor;

namespace {

// One well-populated cell around `center` whose mean lands close to it.
PointCloud cell_filler(Point center, double spread, std::uint64_t seed,
                       int n = 200) {
  SplitRng rng(seed);
  PointCloud cloud;
  for (int i = 0; i < n; ++i) {
    cloud.points.emplace_back(center.x + spread * (2 * rng.next_double() - 1),
                              center.y + spread * (2 * rng.next_double() - 1),
                              center.z + spread * (2 * rng.next_double() - 1));
  }
  return cloud;
}

Pose random_small_pose(SplitRng& rng, double t_mag, double r_mag) {
  Pose p;
  p.tx = (2 * rng.next_double() - 1) * t_mag;
  p.ty = (2 * rng.next_double() - 1) * t_mag;
  p.tz = (2 * rng.next_double() - 1) * t_mag;
  p.roll = (2 * rng.next_double() - 1) * r_mag;
  p.pitch = (2 * rng.next_double() - 1) * r_mag;
  p.yaw = (2 * rng.next_double() - 1) * r_mag;
  return p;
}

// FD validity needs transformed points away from cell boundaries.
bool away_from_cell_boundaries(const NdtMap& map, const PointCloud& scan,
                               const Pose& pose, double margin) {
  const Eigen::Matrix3d r = pose.rotation();
  const Eigen::Vector3d t = pose.translation();
  for (const Point& p : scan.points) {
    const Eigen::Vector3d y = r * p.vec() + t;
    for (int a = 0; a < 3; ++a) {
      const double frac = y(a) / map.cell_size - std::floor(y(a) / map.cell_size);
      if (frac < margin || frac > 1.0 - margin) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("a point at the cell mean scores one") {
  const PointCloud filler = cell_filler(Point(0.5, 0.5, 0.5), 0.35, 51);
  const NdtMap map = build_ndt_map(filler, 1.0);
  REQUIRE(map.size() == 1);
  PointCloud scan;
  scan.points.push_back(map.cells[0].second.mean);
  CHECK(ndt_score(map, scan, Pose::identity()) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a scan outside every occupied cell scores zero") {
  const NdtMap map = build_ndt_map(cell_filler(Point(0.5, 0.5, 0.5), 0.35, 52), 1.0);
  PointCloud scan;
  scan.points.emplace_back(50.0, 50.0, 50.0);
  scan.points.emplace_back(-30.0, 2.0, 1.0);
  CHECK(ndt_score(map, scan, Pose::identity()) == 0.0);
}

TEST_CASE("score matches a direct formula evaluation") {
  PointCloud filler = cell_filler(Point(0.5, 0.5, 0.5), 0.35, 53);
  const PointCloud second = cell_filler(Point(1.5, 0.5, 0.5), 0.3, 54);
  filler.points.insert(filler.points.end(), second.points.begin(),
                       second.points.end());
  const NdtMap map = build_ndt_map(filler, 1.0);
  REQUIRE(map.size() == 2);

  PointCloud scan;
  scan.points.emplace_back(0.4, 0.6, 0.5);
  scan.points.emplace_back(0.7, 0.4, 0.6);
  scan.points.emplace_back(1.6, 0.5, 0.4);
  scan.points.emplace_back(1.2, 0.8, 0.55);
  scan.points.emplace_back(7.0, 7.0, 7.0);  // empty cell, contributes 0

  double expected = 0.0;
  for (const Point& p : scan.points) {
    const NdCell* cell = map.cell_at(p);
    if (cell == nullptr) continue;
    const Eigen::Vector3d d = p.vec() - cell->mean.vec();
    // independent inverse route
    const Eigen::Matrix3d inv = cell->covariance.inverse();
    expected += std::exp(-0.5 * d.dot(inv * d));
  }
  CHECK(ndt_score(map, scan, Pose::identity()) ==
        doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("transforming the scan commutes with evaluating at the pose") {
  const PointCloud scene = testscene::small_structured_cloud(55);
  const NdtMap map = build_ndt_map(scene, 1.0);
  const PointCloud scan = voxel_filter(scene, 0.5);
  SplitRng rng(56);
  for (int i = 0; i < 10; ++i) {
    const Pose pose = random_small_pose(rng, 0.4, 0.1);
    const double direct = ndt_score(map, scan, pose);
    const double moved = ndt_score(map, apply_pose(scan, pose), Pose::identity());
    CHECK(std::abs(direct - moved) < 1e-9);
  }
}

TEST_CASE("analytic gradient matches finite differences") {
  SplitRng rng(57);
  int checked = 0;
  int attempts = 0;
  while (checked < 25 && attempts < 500) {
    ++attempts;
    const PointCloud scene = testscene::small_structured_cloud(1000 + attempts);
    const NdtMap map = build_ndt_map(scene, 1.0);
    PointCloud scan;
    for (int i = 0; i < 20; ++i) {
      const std::size_t k = static_cast<std::size_t>(rng.next_below(scene.size()));
      scan.points.push_back(scene.points[k]);
    }
    const Pose pose = random_small_pose(rng, 0.25, 0.08);
    if (!away_from_cell_boundaries(map, scan, pose, 1e-3)) continue;
    const ScoreDerivatives d = ndt_gradient_hessian(map, scan, pose);
    if (d.score < 1e-6) continue;
    const Vector6d fd = oracle::fd_score_gradient(map, scan, pose, 1e-5);
    if (fd.norm() < 1e-8) continue;
    CHECK((d.gradient - fd).norm() / fd.norm() < 1e-4);
    CHECK((d.hessian - d.hessian.transpose()).norm() <= 1e-9);
    ++checked;
  }
  CHECK(checked == 25);
}

TEST_CASE("gradient vanishes at a single-point stationary pose") {
  const PointCloud filler = cell_filler(Point(0.5, 0.5, 0.5), 0.35, 58);
  const NdtMap map = build_ndt_map(filler, 1.0);
  PointCloud scan;
  scan.points.push_back(map.cells[0].second.mean);
  const ScoreDerivatives d = ndt_gradient_hessian(map, scan, Pose::identity());
  // translation block is exactly stationary; angle derivatives see the lever
  // arm of the point, which is also stationary because d = 0
  CHECK(d.gradient.norm() < 1e-8);
}

TEST_CASE("translation gradient of a single point follows the chain rule") {
  const PointCloud filler = cell_filler(Point(0.5, 0.5, 0.5), 0.35, 59);
  const NdtMap map = build_ndt_map(filler, 1.0);
  const NdCell& cell = map.cells[0].second;
  PointCloud scan;
  scan.points.emplace_back(0.62, 0.41, 0.57);
  const ScoreDerivatives out = ndt_gradient_hessian(map, scan, Pose::identity());
  const Eigen::Vector3d d = scan.points[0].vec() - cell.mean.vec();
  const Eigen::Matrix3d inv = cell.covariance.inverse();
  const double e = std::exp(-0.5 * d.dot(inv * d));
  const Eigen::Vector3d expected = -e * (inv * d);
  CHECK((out.gradient.head<3>() - expected).norm() < 1e-9);
}

TEST_CASE("registration from the optimum stays put") {
  const PointCloud scene = testscene::small_structured_cloud(60);
  const NdtMap map = build_ndt_map(scene, 1.0);
  const PointCloud scan = voxel_filter(scene, 0.5);
  const RegistrationResult result = register_scan(map, scan, Pose::identity());
  CHECK(result.converged);
  CHECK(result.iterations <= 3);
  CHECK(result.pose.translation().norm() < 1e-3);
}

TEST_CASE("registration agrees with the exhaustive pose-grid oracle") {
  const PointCloud scene = testscene::small_structured_cloud(61);
  const NdtMap map = build_ndt_map(scene, 1.0);
  const PointCloud scan =
      voxel_filter(testscene::noisy_scan_of(scene, 0.02, 62), 0.5);

  Pose initial;
  initial.tx = 0.5 * std::cos(1.1);
  initial.ty = 0.5 * std::sin(1.1);
  const RegistrationResult result = register_scan(map, scan, initial);
  CHECK(result.converged);

  const auto grid = oracle::grid_search_pose(map, scan, Pose::identity(), 0.6, 0.01,
                                             3.0 * M_PI / 180.0, 0.25 * M_PI / 180.0);
  CHECK((result.pose.translation() - grid.pose.translation()).norm() < 0.02);
}

TEST_CASE("zero-overlap registration fails gracefully") {
  const NdtMap map = build_ndt_map(cell_filler(Point(0.5, 0.5, 0.5), 0.35, 63), 1.0);
  PointCloud scan;
  scan.points.emplace_back(100.0, 100.0, 100.0);
  const RegistrationResult result = register_scan(map, scan, Pose::identity());
  CHECK((result.converged == false || result.final_score == 0.0));
}

TEST_CASE("empty scans are rejected") {
  const NdtMap map = build_ndt_map(cell_filler(Point(0.5, 0.5, 0.5), 0.35, 64), 1.0);
  CHECK_THROWS_AS(register_scan(map, PointCloud{}, Pose::identity()),
                  std::invalid_argument);
}

TEST_CASE("accepted iterates never decrease the score") {
  const PointCloud scene = testscene::small_structured_cloud(65);
  const NdtMap map = build_ndt_map(scene, 1.0);
  const PointCloud scan =
      voxel_filter(testscene::noisy_scan_of(scene, 0.03, 66), 0.5);
  SplitRng rng(67);
  for (int i = 0; i < 5; ++i) {
    Pose initial;
    initial.tx = 0.6 * (2 * rng.next_double() - 1);
    initial.ty = 0.6 * (2 * rng.next_double() - 1);
    initial.yaw = 0.05 * (2 * rng.next_double() - 1);
    const RegistrationResult result = register_scan(map, scan, initial);
    REQUIRE(!result.score_trace.empty());
    for (std::size_t k = 1; k < result.score_trace.size(); ++k) {
      CHECK(result.score_trace[k] >= result.score_trace[k - 1]);
    }
  }
}

TEST_CASE("matching time grows with scan size") {
  const PointCloud scene = testscene::small_structured_cloud(68);
  const NdtMap map = build_ndt_map(scene, 1.0);
  SplitRng rng(69);

  std::vector<double> mean_times;
  for (const std::size_t size : {100u, 200u, 400u, 800u}) {
    PointCloud scan;
    scan.points.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
      const Point& p = scene.points[rng.next_below(scene.size())];
      scan.points.emplace_back(p.x + rng.next_gaussian(0.01),
                               p.y + rng.next_gaussian(0.01),
                               p.z + rng.next_gaussian(0.01));
    }
    Pose initial;
    initial.tx = 0.2;
    double total = 0.0;
    const int reps = 25;
    for (int r = 0; r < reps; ++r) {
      total += register_scan(map, scan, initial).matching_time_ms;
    }
    mean_times.push_back(total / reps);
  }
  for (std::size_t i = 1; i < mean_times.size(); ++i) {
    CHECK(mean_times[i] > mean_times[i - 1]);
  }
}
