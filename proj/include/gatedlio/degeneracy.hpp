#pragma once

#include <span>

#include <Eigen/Core>

#include "gatedlio/lidar_measurement.hpp"

namespace gatedlio {

using Mat6 = Eigen::Matrix<double, 6, 6>;

struct DegeneracyThresholds {
  double rot = 1.0e4;     // 1/rad^2
  double trans = 1.5e5;   // 1/m^2, calibrated at sigma = 3 cm
};

/// Eigen-analysis of the rotation and translation 3x3 diagonal blocks of the
/// pose information matrix. Eigenvalues ascending, eigenvectors as columns.
struct DegeneracyReport {
  Vec3 eig_rot = Vec3::Zero();
  Vec3 eig_trans = Vec3::Zero();
  Mat3 dir_rot = Mat3::Identity();
  Mat3 dir_trans = Mat3::Identity();
  bool rot_degenerate = false;
  bool trans_degenerate = false;
  bool degenerate = false;
  double threshold_rot = 0.0;
  double threshold_trans = 0.0;
};

/// sum_j h_j^T h_j / var_j over the [d theta_GI, d p_GI] columns of each row.
/// Empty input gives the zero matrix. noise_var must match rows in length.
Mat6 pose_hessian(std::span<const LidarResidualRow> rows, std::span<const double> noise_var);

DegeneracyReport detect(const Mat6& h, const DegeneracyThresholds& thresholds);

}  // namespace gatedlio
