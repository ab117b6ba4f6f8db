#pragma once

#include <span>

#include <Eigen/Core>

#include "gatedlio/state.hpp"

namespace gatedlio {

/// Pose ^M T_O reported by the auxiliary odometry in its own origin frame M.
struct OdomPose {
  double t = 0.0;
  Rotation rot;
  Vec3 pos = Vec3::Zero();
};

struct OdomNoiseParams {
  double sigma_rot = 2.5e-3;      // rad per measurement
  double sigma_pos_per_m = 0.02;  // m per metre travelled
  double sigma_pos_floor = 1e-3;  // m
};

/// Relative pose ^{O_{k-1}} T_{O_k} with its noise.
struct RelPoseMeasurement {
  Rotation z_rot;
  Vec3 z_pos = Vec3::Zero();
  Mat3 cov_rot = Mat3::Identity();  // rad^2
  Mat3 cov_pos = Mat3::Identity();  // m^2
};

using OdomJacobian = Eigen::Matrix<double, 3, kStateDim>;

struct OdomResidual {
  Vec3 r_rot = Vec3::Zero();
  Vec3 r_pos = Vec3::Zero();
  OdomJacobian h_rot = OdomJacobian::Zero();
  OdomJacobian h_pos = OdomJacobian::Zero();
};

inline constexpr double kOdomExtrapolationTol = 0.020;  // s

/// Pose at time t: linear in translation, slerp in rotation. Within
/// kOdomExtrapolationTol outside the buffer span the end segment is
/// extrapolated at constant velocity; farther out throws std::out_of_range.
OdomPose interpolate_pose(std::span<const OdomPose> buffer, double t);

/// ^{a}T_{b} = (^M T_a)^-1 ^M T_b with diagonal covariances from `noise`.
RelPoseMeasurement relative_measurement(const OdomPose& a, const OdomPose& b,
                                        const OdomNoiseParams& noise = {});

/// Predicted relative odometry motion between the previous updated state and
/// x_k (both mapped through the odometry extrinsic).
Rotation predict_relative_rotation(const NavState& x_k, const NavState& x_prev);
Vec3 predict_relative_translation(const NavState& x_k, const NavState& x_prev);

/// r_rot = log(z_hat^T z), r_pos = z - z_hat, Jacobians with respect to the
/// error state of x_k (x_prev treated as known).
OdomResidual residual_and_jacobian(const RelPoseMeasurement& m, const NavState& x_k,
                                   const NavState& x_prev);

}  // namespace gatedlio
