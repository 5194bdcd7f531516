#include "dorloc/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace dor {

namespace {

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw std::invalid_argument(std::string("non-finite ") + what + " coordinate");
  }
}

}  // namespace

Point::Point(double px, double py, double pz) : x(px), y(py), z(pz) {
  check_finite(px, "x");
  check_finite(py, "y");
  check_finite(pz, "z");
}

double squared_distance(const Point& a, const Point& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

double distance(const Point& a, const Point& b) {
  return std::sqrt(squared_distance(a, b));
}

double normalize_angle(double radians) {
  double r = std::remainder(radians, 2.0 * M_PI);
  if (r <= -M_PI) {
    r += 2.0 * M_PI;
  }
  return r;
}

Eigen::Matrix3d Pose::rotation() const {
  const double cr = std::cos(roll), sr = std::sin(roll);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  Eigen::Matrix3d r;
  r << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,  //
      sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,   //
      -sp, cp * sr, cp * cr;
  return r;
}

Pose Pose::normalized() const {
  Pose p = *this;
  p.roll = normalize_angle(p.roll);
  p.pitch = normalize_angle(p.pitch);
  p.yaw = normalize_angle(p.yaw);
  return p;
}

Pose pose_from_rt(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation) {
  Pose p;
  p.tx = translation.x();
  p.ty = translation.y();
  p.tz = translation.z();
  // R(2,0) = -sin(pitch); gimbal lock when |pitch| = pi/2.
  const double sp = -rotation(2, 0);
  p.pitch = std::asin(std::clamp(sp, -1.0, 1.0));
  if (std::abs(sp) < 1.0 - 1e-12) {
    p.roll = std::atan2(rotation(2, 1), rotation(2, 2));
    p.yaw = std::atan2(rotation(1, 0), rotation(0, 0));
  } else {
    // Roll and yaw are coupled; put all rotation about z into yaw.
    p.roll = 0.0;
    p.yaw = std::atan2(-rotation(0, 1), rotation(1, 1));
  }
  return p.normalized();
}

Pose compose(const Pose& first, const Pose& second) {
  const Eigen::Matrix3d r1 = first.rotation();
  const Eigen::Matrix3d r2 = second.rotation();
  return pose_from_rt(r1 * r2, r1 * second.translation() + first.translation());
}

Pose inverse(const Pose& pose) {
  const Eigen::Matrix3d rt = pose.rotation().transpose();
  return pose_from_rt(rt, -(rt * pose.translation()));
}

Point transform_point(const Pose& pose, const Point& p) {
  return Point::from_vec(pose.rotation() * p.vec() + pose.translation());
}

}  // namespace dor
