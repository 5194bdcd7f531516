#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dorloc/cloud.hpp"
#include "dorloc/geometry.hpp"

namespace dor {

enum class SegmentKind { corridor, plaza, intersection, sparse_road };

std::string to_string(SegmentKind kind);
SegmentKind segment_kind_from_string(const std::string& name);

/// One stretch of route. `turn_deg` is the heading change applied at the
/// start of the segment, so routes with corners (L-shapes, loops) can be
/// described; 0 keeps the previous heading. `facade_depth` adds per-block
/// recesses to walls: flat walls make needle-thin NDT features that give a
/// registration nothing to pull on from a realistic initial offset.
struct SegmentSpec {
  SegmentKind kind = SegmentKind::corridor;
  double length = 0.0;         // meters along the centerline
  double wall_height = 4.0;    // meters
  double pole_density = 0.0;   // poles per 100 m
  double point_spacing = 0.3;  // meters between sampled surface points
  double turn_deg = 0.0;
  double facade_depth = 0.0;   // max outward recess of wall blocks, meters
};

struct SceneSpec {
  double extent = 0.0;       // declared bounding-box size, meters
  std::vector<SegmentSpec> segments;
  double noise_sigma = 0.0;  // per-point Gaussian position noise, meters
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

struct Trajectory {
  struct Waypoint {
    Point position;
    double yaw = 0.0;
  };
  std::vector<Waypoint> waypoints;
  double spacing = 0.0;
};

// Fixed scene geometry (meters). Offsets are deliberately fractional so that
// surfaces do not sit on the integer voxel lattice of the default NDT grid;
// a wall Gaussian split across two cells makes a poor feature.
inline constexpr double kGroundZ = 0.3;       // road surface height
inline constexpr double kSensorZ = 1.65;      // sensor height, roof-mounted analog
inline constexpr double kCorridorHalfWidth = 4.3;
inline constexpr double kIntersectionHalfWidth = 4.3;
inline constexpr double kCrossHalfWidth = 4.3;   // half width of the crossing street
inline constexpr double kCrossArmDepth = 12.0;   // how far the crossing street extends
inline constexpr double kPlazaWallDistance = 27.6;
inline constexpr double kPlazaGroundHalfWidth = 8.0;
inline constexpr double kSparseRoadHalfWidth = 6.0;
inline constexpr double kPoleRadius = 0.15;
inline constexpr double kPoleHeight = 3.0;
inline constexpr double kPoleInset = 1.5;  // pole distance inward from the road edge
inline constexpr double kFacadeBlockLength = 0.8;  // recess block pitch along a wall
// Sparse roads carry occasional curb-height clutter (hedges, parked objects);
// without it nothing off the ground plane constrains the pose there.
inline constexpr double kClutterPitch = 12.0;
inline constexpr double kClutterHeight = 0.45;
inline constexpr double kClutterLength = 1.2;
inline constexpr double kClutterWidth = 0.6;

double ground_half_width(SegmentKind kind);

/// Deterministic sampled-surface scene: ground plane plus per-kind walls and
/// poles, with Gaussian position noise. Same spec + seed gives a bitwise
/// identical cloud.
PointCloud generate_scene(const SceneSpec& spec);

/// Waypoints at arc-length multiples of `spacing` along the road centerline,
/// yaw following the local tangent. A spacing longer than the route yields
/// the start waypoint alone.
Trajectory make_trajectory(const SceneSpec& spec, double spacing);

double total_centerline_length(const SceneSpec& spec);
SegmentKind segment_kind_at(const SceneSpec& spec, double arc_length);

/// Scene spec file: '#' comments, "key = value" lines, one "segment = ..."
/// line per segment with kind/length/wall_height/pole_density/point_spacing
/// (and optional turn_deg) as k=v pairs.
SceneSpec parse_scene_spec_text(const std::string& text);
SceneSpec read_scene_spec(const std::filesystem::path& path);
void write_scene_spec(const std::filesystem::path& path, const SceneSpec& spec);

/// Trajectory CSV: waypoint_id, x, y, z, yaw.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

/// The mixed-segment corpus used by default: corridors, intersections, a
/// plaza and a sparse road, with one 90-degree corner.
SceneSpec default_scene_spec();

}  // namespace dor
