#pragma once

#include <vector>

#include <Eigen/Core>

#include "dorloc/cloud.hpp"
#include "dorloc/geometry.hpp"
#include "dorloc/ndt_map.hpp"

namespace dor {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

struct RegConfig {
  int max_iterations = 30;
  double translation_epsilon = 1e-4;  // meters
  double rotation_epsilon = 1e-5;     // radians
  int max_step_halvings = 10;
  // Per-point contribution is d1 * exp(-0.5 * d2 * mahalanobis^2); the
  // defaults give the plain Gaussian form.
  double score_d1 = 1.0;
  double score_d2 = 1.0;
};

struct RegistrationResult {
  Pose pose;
  bool converged = false;
  int iterations = 0;
  double matching_time_ms = 0.0;
  double final_score = 0.0;
  std::vector<double> score_trace;  // accepted-iterate scores, non-decreasing
};

/// Sum over scan points of the Gaussian likelihood against the cell
/// containing the transformed point; points in empty cells contribute 0.
/// Always in [0, d1 * n].
double ndt_score(const NdtMap& map, const PointCloud& scan, const Pose& pose,
                 const RegConfig& config = {});

/// Analytic gradient and Hessian of ndt_score with respect to
/// (tx, ty, tz, roll, pitch, yaw). The Hessian is symmetric by construction.
struct ScoreDerivatives {
  double score = 0.0;
  Vector6d gradient = Vector6d::Zero();
  Matrix6d hessian = Matrix6d::Zero();
};
ScoreDerivatives ndt_gradient_hessian(const NdtMap& map, const PointCloud& scan,
                                      const Pose& pose, const RegConfig& config = {});

/// Newton ascent on the NDT score with eigenvalue-safeguarded steps and a
/// backtracking line search; the scan must already be subsampled by the
/// caller. Throws std::invalid_argument on an empty scan.
RegistrationResult register_scan(const NdtMap& map, const PointCloud& scan,
                                 const Pose& initial, const RegConfig& config = {});

}  // namespace dor
