#include <doctest.h>

#include <cmath>
#include <limits>

#include <Eigen/Geometry>

#include "dorloc/cloud.hpp"
#include "dorloc/geometry.hpp"
#include "dorloc/rng.hpp"

using namespace dor;

namespace {

Pose random_pose(SplitRng& rng, double t_mag, double r_mag) {
  Pose p;
  p.tx = (2 * rng.next_double() - 1) * t_mag;
  p.ty = (2 * rng.next_double() - 1) * t_mag;
  p.tz = (2 * rng.next_double() - 1) * t_mag;
  p.roll = (2 * rng.next_double() - 1) * r_mag;
  p.pitch = (2 * rng.next_double() - 1) * r_mag;
  p.yaw = (2 * rng.next_double() - 1) * r_mag;
  return p;
}

}  // namespace

TEST_CASE("point constructor rejects non-finite coordinates") {
  CHECK_THROWS_AS(Point(std::numeric_limits<double>::quiet_NaN(), 0, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(Point(0, std::numeric_limits<double>::infinity(), 0),
                  std::invalid_argument);
  CHECK_NOTHROW(Point(1.5, -2.0, 3.25));
}

TEST_CASE("normalize_angle wraps into (-pi, pi]") {
  CHECK(normalize_angle(M_PI) == doctest::Approx(M_PI));
  CHECK(normalize_angle(-M_PI) == doctest::Approx(M_PI));
  CHECK(normalize_angle(3 * M_PI / 2) == doctest::Approx(-M_PI / 2));
  CHECK(normalize_angle(0.25) == doctest::Approx(0.25));
  SplitRng rng(7);
  for (int i = 0; i < 200; ++i) {
    const double a = (2 * rng.next_double() - 1) * 50.0;
    const double n = normalize_angle(a);
    CHECK(n > -M_PI);
    CHECK(n <= M_PI);
    CHECK(std::remainder(a - n, 2 * M_PI) == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("rotation follows the Rz*Ry*Rx convention") {
  SplitRng rng(11);
  for (int i = 0; i < 50; ++i) {
    const Pose p = random_pose(rng, 0.0, 3.0);
    const Eigen::Matrix3d expected =
        (Eigen::AngleAxisd(p.yaw, Eigen::Vector3d::UnitZ()) *
         Eigen::AngleAxisd(p.pitch, Eigen::Vector3d::UnitY()) *
         Eigen::AngleAxisd(p.roll, Eigen::Vector3d::UnitX()))
            .toRotationMatrix();
    CHECK((p.rotation() - expected).norm() < 1e-12);
  }
}

TEST_CASE("identity pose leaves points unchanged") {
  const Point p(1.0, -2.0, 0.5);
  const Point q = transform_point(Pose::identity(), p);
  CHECK(q.x == p.x);
  CHECK(q.y == p.y);
  CHECK(q.z == p.z);
}

TEST_CASE("pure translation moves the origin") {
  Pose p;
  p.tx = 1.0;
  const Point q = transform_point(p, Point(0, 0, 0));
  CHECK(q.x == doctest::Approx(1.0));
  CHECK(q.y == doctest::Approx(0.0));
  CHECK(q.z == doctest::Approx(0.0));
}

TEST_CASE("compose with inverse gives the identity") {
  SplitRng rng(13);
  for (int i = 0; i < 100; ++i) {
    const Pose p = random_pose(rng, 10.0, 3.0);
    const Pose id = compose(p, inverse(p));
    CHECK(std::abs(id.tx) < 1e-9);
    CHECK(std::abs(id.ty) < 1e-9);
    CHECK(std::abs(id.tz) < 1e-9);
    CHECK(std::abs(id.roll) < 1e-9);
    CHECK(std::abs(id.pitch) < 1e-9);
    CHECK(std::abs(id.yaw) < 1e-9);
  }
}

TEST_CASE("apply_pose is an isometry") {
  SplitRng rng(17);
  PointCloud cloud;
  for (int i = 0; i < 60; ++i) {
    cloud.points.emplace_back(rng.next_double() * 10, rng.next_double() * 10,
                              rng.next_double() * 10);
  }
  const Pose pose = random_pose(rng, 5.0, 3.0);
  const PointCloud moved = apply_pose(cloud, pose);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t a = static_cast<std::size_t>(rng.next_below(cloud.size()));
    const std::size_t b = static_cast<std::size_t>(rng.next_below(cloud.size()));
    CHECK(std::abs(distance(cloud.points[a], cloud.points[b]) -
                   distance(moved.points[a], moved.points[b])) < 1e-9);
  }
}

TEST_CASE("pose then inverse pose restores the cloud") {
  SplitRng rng(19);
  PointCloud cloud;
  for (int i = 0; i < 40; ++i) {
    cloud.points.emplace_back(rng.next_double() * 4 - 2, rng.next_double() * 4 - 2,
                              rng.next_double() * 4 - 2);
  }
  const Pose pose = random_pose(rng, 3.0, 2.0);
  const PointCloud round = apply_pose(apply_pose(cloud, pose), inverse(pose));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK(distance(cloud.points[i], round.points[i]) < 1e-9);
  }
}

TEST_CASE("pose_from_rt inverts rotation construction") {
  SplitRng rng(23);
  for (int i = 0; i < 100; ++i) {
    const Pose p = random_pose(rng, 4.0, 1.2);
    const Pose q = pose_from_rt(p.rotation(), p.translation());
    CHECK((q.rotation() - p.rotation()).norm() < 1e-12);
    CHECK((q.translation() - p.translation()).norm() < 1e-12);
  }
}
