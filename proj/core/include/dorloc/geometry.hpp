#pragma once

#include <Eigen/Core>

namespace dor {

/// A 3D point in meters. Coordinates are always finite; constructors reject
/// NaN and infinity.
struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Point() = default;
  Point(double px, double py, double pz);

  Eigen::Vector3d vec() const { return {x, y, z}; }
  static Point from_vec(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
};

double distance(const Point& a, const Point& b);
double squared_distance(const Point& a, const Point& b);

/// Wraps an angle into (-pi, pi].
double normalize_angle(double radians);

/// Rigid transform: translation in meters, rotation as roll/pitch/yaw in
/// radians with R = Rz(yaw) * Ry(pitch) * Rx(roll). Angles are kept
/// normalized to (-pi, pi].
struct Pose {
  double tx = 0.0;
  double ty = 0.0;
  double tz = 0.0;
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  static Pose identity() { return {}; }

  Eigen::Matrix3d rotation() const;
  Eigen::Vector3d translation() const { return {tx, ty, tz}; }

  /// Returns a copy with all three angles wrapped into (-pi, pi].
  Pose normalized() const;
};

/// Pose of the chained transform: apply `second` first, then `first`.
Pose compose(const Pose& first, const Pose& second);

Pose inverse(const Pose& pose);

/// Recovers roll/pitch/yaw from a rotation matrix (Rz*Ry*Rx convention).
Pose pose_from_rt(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

Point transform_point(const Pose& pose, const Point& p);

}  // namespace dor
