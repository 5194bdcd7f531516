// Small structured scenes shared by registration tests and the acceptance
// suite: jittered ground plus recessed walls in two orientations and a pole,
// so all six pose parameters are observable from a half-meter offset.
// Sampling is irregular and surfaces sit off the integer voxel lattice; a
// regular lattice beats against the NDT grid and a flat wall makes a
// needle-thin feature, both of which shrink the convergence basin.
#pragma once

#include <vector>

#include "dorloc/cloud.hpp"
#include "dorloc/ndt_map.hpp"
#include "dorloc/rng.hpp"

namespace testscene {

inline dor::PointCloud small_structured_cloud(std::uint64_t seed) {
  dor::SplitRng rng(seed);
  dor::PointCloud cloud;
  auto jitter = [&rng](double pitch) { return (rng.next_double() - 0.5) * pitch; };
  auto recesses = [&rng](double span, double depth) {
    std::vector<double> r(static_cast<std::size_t>(std::ceil(span / 0.8)));
    for (double& v : r) v = depth * rng.next_double();
    return r;
  };

  // ground, 11 x 11 m at z = 0.3
  for (double x = -5.2; x <= 5.8; x += 0.3) {
    for (double y = -5.2; y <= 5.8; y += 0.3) {
      cloud.points.emplace_back(x + jitter(0.3), y + jitter(0.3),
                                0.3 + 0.01 * rng.next_gaussian(1.0));
    }
  }
  // wall along x at y = 4.6, recessed per block so it carries structure in x
  {
    const std::vector<double> blocks = recesses(11.0, 0.4);
    for (double x = -5.2; x <= 5.8; x += 0.28) {
      const auto b = std::min<std::size_t>(blocks.size() - 1,
                                           static_cast<std::size_t>((x + 5.2) / 0.8));
      for (double z = 0.45; z <= 3.2; z += 0.28) {
        cloud.points.emplace_back(x + jitter(0.28),
                                  4.6 + blocks[b] + 0.02 * rng.next_gaussian(1.0),
                                  z + jitter(0.28));
      }
    }
  }
  // wall along y at x = -4.4, recessed per block likewise
  {
    const std::vector<double> blocks = recesses(11.0, 0.4);
    for (double y = -5.2; y <= 5.8; y += 0.28) {
      const auto b = std::min<std::size_t>(blocks.size() - 1,
                                           static_cast<std::size_t>((y + 5.2) / 0.8));
      for (double z = 0.45; z <= 3.2; z += 0.28) {
        cloud.points.emplace_back(-4.4 - blocks[b] + 0.02 * rng.next_gaussian(1.0),
                                  y + jitter(0.28), z + jitter(0.28));
      }
    }
  }
  // a pole near the middle
  for (double z = 0.45; z <= 2.8; z += 0.22) {
    for (int a = 0; a < 10; ++a) {
      const double th = a * M_PI / 5.0 + jitter(M_PI / 5.0);
      cloud.points.emplace_back(2.35 + 0.15 * std::cos(th),
                                -1.45 + 0.15 * std::sin(th), z + jitter(0.22));
    }
  }
  // a few chunky obstacles; their near-isotropic cells anchor the pose from
  // every approach direction
  const double boxes[][2] = {{-1.7, 2.4}, {3.4, 2.1}, {-2.6, -3.3}, {1.1, -4.1}};
  for (const auto& box : boxes) {
    const double cx = box[0] + jitter(0.6);
    const double cy = box[1] + jitter(0.6);
    for (double dx = -0.6; dx <= 0.6; dx += 0.25) {
      for (double dy = -0.4; dy <= 0.4; dy += 0.25) {
        for (double z = 0.4; z <= 1.3; z += 0.25) {
          cloud.points.emplace_back(cx + dx + jitter(0.25), cy + dy + jitter(0.25),
                                    z + jitter(0.25));
        }
      }
    }
  }
  return cloud;
}

/// Noisy copy standing in for a sensor scan of the same structure.
inline dor::PointCloud noisy_scan_of(const dor::PointCloud& cloud, double sigma,
                                     std::uint64_t seed) {
  dor::SplitRng rng(seed);
  dor::PointCloud scan;
  scan.frame_id = dor::Frame::scan;
  for (const dor::Point& p : cloud.points) {
    scan.points.emplace_back(p.x + rng.next_gaussian(sigma),
                             p.y + rng.next_gaussian(sigma),
                             p.z + rng.next_gaussian(sigma));
  }
  return scan;
}

}  // namespace testscene
