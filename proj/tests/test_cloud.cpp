#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dorloc/cloud.hpp"
#include "dorloc/rng.hpp"
#include "oracles.hpp"

using namespace dor;

namespace {

PointCloud random_cloud(std::uint64_t seed, std::size_t n, double extent) {
  SplitRng rng(seed);
  PointCloud cloud;
  for (std::size_t i = 0; i < n; ++i) {
    cloud.points.emplace_back(rng.next_double() * extent, rng.next_double() * extent,
                              rng.next_double() * extent);
  }
  return cloud;
}

std::filesystem::path temp_file(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / "dorloc_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("voxel_filter on an empty cloud is empty") {
  CHECK(voxel_filter(PointCloud{}, 1.0).empty());
}

TEST_CASE("voxel_filter rejects non-positive leaf") {
  CHECK_THROWS_AS(voxel_filter(PointCloud{}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(voxel_filter(PointCloud{}, -1.0), std::invalid_argument);
}

TEST_CASE("voxel_filter collapses a cube of points to its center") {
  PointCloud cloud;
  for (const double x : {0.25, 0.75}) {
    for (const double y : {0.25, 0.75}) {
      for (const double z : {0.25, 0.75}) {
        cloud.points.emplace_back(x, y, z);
      }
    }
  }
  const PointCloud filtered = voxel_filter(cloud, 1.0);
  REQUIRE(filtered.size() == 1);
  CHECK(filtered.points[0].x == doctest::Approx(0.5));
  CHECK(filtered.points[0].y == doctest::Approx(0.5));
  CHECK(filtered.points[0].z == doctest::Approx(0.5));
}

TEST_CASE("voxel_filter output count matches the occupied-cell oracle") {
  const PointCloud cloud = random_cloud(101, 1000, 10.0);
  const PointCloud filtered = voxel_filter(cloud, 1.0);
  CHECK(filtered.size() == oracle::occupied_cell_count(cloud, 1.0));
}

TEST_CASE("voxel_filter orders output by ascending cell index") {
  const PointCloud filtered = voxel_filter(random_cloud(102, 500, 8.0), 0.5);
  for (std::size_t i = 1; i < filtered.size(); ++i) {
    CHECK(cell_index_of(filtered.points[i - 1], 0.5) <
          cell_index_of(filtered.points[i], 0.5));
  }
}

TEST_CASE("voxel_filter is idempotent") {
  SUBCASE("one point per cell by construction") {
    PointCloud cloud;
    for (int i = 0; i < 20; ++i) {
      cloud.points.emplace_back(i + 0.3, 2 * i + 0.6, 0.1);
    }
    const PointCloud once = voxel_filter(cloud, 1.0);
    const PointCloud twice = voxel_filter(once, 1.0);
    REQUIRE(once.size() == cloud.size());
    REQUIRE(twice.size() == once.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
      CHECK(once.points[i].x == twice.points[i].x);
      CHECK(once.points[i].y == twice.points[i].y);
      CHECK(once.points[i].z == twice.points[i].z);
    }
  }
  SUBCASE("random cloud") {
    const PointCloud once = voxel_filter(random_cloud(103, 800, 6.0), 1.0);
    const PointCloud twice = voxel_filter(once, 1.0);
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
      CHECK(distance(once.points[i], twice.points[i]) == 0.0);
    }
  }
}

TEST_CASE("crop_range keeps the boundary point") {
  PointCloud cloud;
  cloud.points.emplace_back(10.0, 0.0, 0.0);
  const PointCloud kept = crop_range(cloud, Point(), 10.0);
  CHECK(kept.size() == 1);
}

TEST_CASE("crop_range empties a far-away cloud") {
  PointCloud cloud;
  cloud.points.emplace_back(5.0, 5.0, 5.0);
  cloud.points.emplace_back(-7.0, 0.0, 0.0);
  CHECK(crop_range(cloud, Point(), 2.0).empty());
}

TEST_CASE("crop_range rejects non-positive range") {
  CHECK_THROWS_AS(crop_range(PointCloud{}, Point(), 0.0), std::invalid_argument);
}

TEST_CASE("crop_range membership and order match the distance oracle") {
  const PointCloud cloud = random_cloud(104, 600, 25.0);
  const Point center(12.0, 12.0, 12.0);
  const PointCloud kept = crop_range(cloud, center, 10.0);
  const std::vector<std::size_t> expected = oracle::points_within(cloud, center, 10.0);
  REQUIRE(kept.size() == expected.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    CHECK(distance(kept.points[i], cloud.points[expected[i]]) == 0.0);
  }
}

TEST_CASE("nested crops equal the tighter crop") {
  const PointCloud cloud = random_cloud(105, 400, 30.0);
  const Point center(15, 15, 15);
  for (const auto [r1, r2] : {std::pair{8.0, 12.0}, {12.0, 8.0}, {10.0, 10.0}}) {
    const PointCloud nested = crop_range(crop_range(cloud, center, r1), center, r2);
    const PointCloud direct = crop_range(cloud, center, std::min(r1, r2));
    REQUIRE(nested.size() == direct.size());
    for (std::size_t i = 0; i < nested.size(); ++i) {
      CHECK(distance(nested.points[i], direct.points[i]) == 0.0);
    }
  }
}

TEST_CASE("cloud file round trip") {
  PointCloud cloud;
  cloud.points.emplace_back(1.0, 2.0, 3.0);
  cloud.points.emplace_back(-0.125, 0.0625, 12.5);
  cloud.points.emplace_back(123456.789, -0.000123456789, 0.0);
  const auto path = temp_file("roundtrip.xyz");
  write_cloud(path, cloud);
  const PointCloud read = read_cloud(path);
  REQUIRE(read.size() == cloud.size());
  // stored precision is 9 significant digits; a second write is identical
  const auto path2 = temp_file("roundtrip2.xyz");
  write_cloud(path2, read);
  CHECK(file_bytes(path) == file_bytes(path2));
}

TEST_CASE("cloud reader reports the offending line") {
  const auto path = temp_file("malformed.xyz");
  std::ofstream out(path);
  out << "# comment\n";
  for (int i = 0; i < 5; ++i) out << "1 2 3\n";
  out << "1 nope 3\n";  // line 7
  out.close();
  try {
    read_cloud(path);
    FAIL("expected parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find(":7") != std::string::npos);
  }
}

TEST_CASE("empty cloud file reads as an empty cloud") {
  const auto path = temp_file("empty.xyz");
  std::ofstream(path).close();
  CHECK(read_cloud(path).empty());
}

TEST_CASE("missing cloud file raises") {
  CHECK_THROWS_AS(read_cloud(temp_file("does_not_exist.xyz")), std::runtime_error);
}
