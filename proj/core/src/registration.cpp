#include "dorloc/registration.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace dor {

namespace {

CellIndex cell_index_of_vec(const Eigen::Vector3d& p, double cell) {
  return CellIndex{
      static_cast<std::int32_t>(std::floor(p.x() / cell)),
      static_cast<std::int32_t>(std::floor(p.y() / cell)),
      static_cast<std::int32_t>(std::floor(p.z() / cell)),
  };
}

struct RotationDerivatives {
  Eigen::Matrix3d r;
  Eigen::Matrix3d d[3];    // d/droll, d/dpitch, d/dyaw
  Eigen::Matrix3d dd[3][3];
};

Eigen::Matrix3d rot_x(double a, int order) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m;
  switch (order) {
    case 0: m << 1, 0, 0, 0, c, -s, 0, s, c; break;
    case 1: m << 0, 0, 0, 0, -s, -c, 0, c, -s; break;
    default: m << 0, 0, 0, 0, -c, s, 0, -s, -c; break;
  }
  return m;
}

Eigen::Matrix3d rot_y(double a, int order) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m;
  switch (order) {
    case 0: m << c, 0, s, 0, 1, 0, -s, 0, c; break;
    case 1: m << -s, 0, c, 0, 0, 0, -c, 0, -s; break;
    default: m << -c, 0, -s, 0, 0, 0, s, 0, -c; break;
  }
  return m;
}

Eigen::Matrix3d rot_z(double a, int order) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m;
  switch (order) {
    case 0: m << c, -s, 0, s, c, 0, 0, 0, 1; break;
    case 1: m << -s, -c, 0, c, -s, 0, 0, 0, 0; break;
    default: m << -c, s, 0, -s, -c, 0, 0, 0, 0; break;
  }
  return m;
}

RotationDerivatives rotation_derivatives(const Pose& pose) {
  const Eigen::Matrix3d rx = rot_x(pose.roll, 0), rx1 = rot_x(pose.roll, 1),
                        rx2 = rot_x(pose.roll, 2);
  const Eigen::Matrix3d ry = rot_y(pose.pitch, 0), ry1 = rot_y(pose.pitch, 1),
                        ry2 = rot_y(pose.pitch, 2);
  const Eigen::Matrix3d rz = rot_z(pose.yaw, 0), rz1 = rot_z(pose.yaw, 1),
                        rz2 = rot_z(pose.yaw, 2);
  RotationDerivatives out;
  out.r = rz * ry * rx;
  out.d[0] = rz * ry * rx1;
  out.d[1] = rz * ry1 * rx;
  out.d[2] = rz1 * ry * rx;
  out.dd[0][0] = rz * ry * rx2;
  out.dd[1][1] = rz * ry2 * rx;
  out.dd[2][2] = rz2 * ry * rx;
  out.dd[0][1] = out.dd[1][0] = rz * ry1 * rx1;
  out.dd[0][2] = out.dd[2][0] = rz1 * ry * rx1;
  out.dd[1][2] = out.dd[2][1] = rz1 * ry1 * rx;
  return out;
}

}  // namespace

double ndt_score(const NdtMap& map, const PointCloud& scan, const Pose& pose,
                 const RegConfig& config) {
  const Eigen::Matrix3d r = pose.rotation();
  const Eigen::Vector3d t = pose.translation();
  double score = 0.0;
  for (const Point& p : scan.points) {
    const Eigen::Vector3d y = r * p.vec() + t;
    const NdCell* cell = map.cell_at_index(cell_index_of_vec(y, map.cell_size));
    if (cell == nullptr) continue;
    const Eigen::Vector3d d = y - cell->mean.vec();
    const double q = d.dot(cell->inverse_covariance * d);
    score += config.score_d1 * std::exp(-0.5 * config.score_d2 * q);
  }
  return score;
}

ScoreDerivatives ndt_gradient_hessian(const NdtMap& map, const PointCloud& scan,
                                      const Pose& pose, const RegConfig& config) {
  const RotationDerivatives rot = rotation_derivatives(pose);
  const Eigen::Vector3d t = pose.translation();
  const double d1 = config.score_d1;
  const double d2 = config.score_d2;

  ScoreDerivatives out;
  for (const Point& p : scan.points) {
    const Eigen::Vector3d x = p.vec();
    const Eigen::Vector3d y = rot.r * x + t;
    const NdCell* cell = map.cell_at_index(cell_index_of_vec(y, map.cell_size));
    if (cell == nullptr) continue;

    const Eigen::Vector3d d = y - cell->mean.vec();
    const Eigen::Vector3d w = cell->inverse_covariance * d;
    const double q = d.dot(w);
    const double e = d1 * std::exp(-0.5 * d2 * q);
    out.score += e;

    Eigen::Matrix<double, 3, 6> jac;
    jac.leftCols<3>() = Eigen::Matrix3d::Identity();
    for (int a = 0; a < 3; ++a) {
      jac.col(3 + a) = rot.d[a] * x;
    }

    const Vector6d u = jac.transpose() * w;          // u_k = w . dy/dp_k
    const Matrix6d quad = jac.transpose() * (cell->inverse_covariance * jac);

    Matrix6d second = Matrix6d::Zero();              // w . d2y/dp_k dp_l
    for (int a = 0; a < 3; ++a) {
      for (int b = a; b < 3; ++b) {
        const double v = w.dot(rot.dd[a][b] * x);
        second(3 + a, 3 + b) = v;
        second(3 + b, 3 + a) = v;
      }
    }

    out.gradient -= (d2 * e) * u;
    out.hessian += e * (d2 * d2 * u * u.transpose() - d2 * (quad + second));
  }
  // enforce exact symmetry against accumulated rounding
  out.hessian = 0.5 * (out.hessian + out.hessian.transpose()).eval();
  return out;
}

namespace {

Pose advance(const Pose& pose, const Vector6d& delta) {
  Pose p = pose;
  p.tx += delta(0);
  p.ty += delta(1);
  p.tz += delta(2);
  p.roll += delta(3);
  p.pitch += delta(4);
  p.yaw += delta(5);
  return p.normalized();
}

}  // namespace

RegistrationResult register_scan(const NdtMap& map, const PointCloud& scan,
                                 const Pose& initial, const RegConfig& config) {
  if (scan.empty()) {
    throw std::invalid_argument("register_scan: empty scan");
  }
  const auto t_start = std::chrono::steady_clock::now();

  RegistrationResult result;
  result.pose = initial.normalized();

  ScoreDerivatives eval = ndt_gradient_hessian(map, scan, result.pose, config);
  result.score_trace.push_back(eval.score);

  while (result.iterations < config.max_iterations) {
    ++result.iterations;

    // Modified Newton for ascent: flip non-negative Hessian eigenvalues and
    // floor the magnitudes, so saddle directions become damped ascent steps.
    Eigen::SelfAdjointEigenSolver<Matrix6d> es(eval.hessian);
    Eigen::Matrix<double, 6, 1> lambda = es.eigenvalues();
    const double floor =
        std::max(1e-12, 1e-6 * lambda.cwiseAbs().maxCoeff());
    for (int i = 0; i < 6; ++i) {
      lambda(i) = -std::max(std::abs(lambda(i)), floor);
    }
    Vector6d step =
        -(es.eigenvectors() *
          (es.eigenvectors().transpose() * eval.gradient).cwiseQuotient(lambda));

    // Trust-region style cap: flat directions otherwise blow up the Newton
    // step and starve the line search.
    const double t_norm = step.head<3>().norm();
    const double r_norm = step.tail<3>().norm();
    const double scale =
        std::min(t_norm > 0 ? 0.5 * map.cell_size / t_norm : 1.0,
                 r_norm > 0 ? 0.25 / r_norm : 1.0);
    if (scale < 1.0) {
      step *= scale;
    }

    if (step.head<3>().norm() < config.translation_epsilon &&
        step.tail<3>().norm() < config.rotation_epsilon) {
      result.converged = true;
      break;
    }

    // Backtracking line search; only strictly improving steps are accepted.
    double alpha = 1.0;
    bool improved = false;
    Pose candidate;
    double candidate_score = 0.0;
    for (int h = 0; h <= config.max_step_halvings; ++h) {
      candidate = advance(result.pose, alpha * step);
      candidate_score = ndt_score(map, scan, candidate, config);
      if (candidate_score > eval.score) {
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) {
      break;
    }

    const Vector6d applied = alpha * step;
    result.pose = candidate;
    result.score_trace.push_back(candidate_score);
    eval = ndt_gradient_hessian(map, scan, result.pose, config);

    if (applied.head<3>().norm() < config.translation_epsilon &&
        applied.tail<3>().norm() < config.rotation_epsilon) {
      result.converged = true;
      break;
    }
  }

  result.final_score = eval.score;
  result.matching_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                t_start)
          .count();
  return result;
}

}  // namespace dor
