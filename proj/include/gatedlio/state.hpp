#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "gatedlio/manifold.hpp"

namespace gatedlio {

inline constexpr int kStateDim = 30;

/// Offsets of each 3-block inside the error state. Every Jacobian in the
/// library uses this column layout.
namespace idx {
inline constexpr int kRot = 0;       // d theta_GI
inline constexpr int kPos = 3;       // d p_GI
inline constexpr int kVel = 6;       // d v_GI
inline constexpr int kBiasGyro = 9;
inline constexpr int kBiasAcc = 12;
inline constexpr int kGravity = 15;
inline constexpr int kRotIL = 18;    // LiDAR extrinsic
inline constexpr int kPosIL = 21;
inline constexpr int kRotIO = 24;    // odometry extrinsic
inline constexpr int kPosIO = 27;
}  // namespace idx

using ErrorState = Eigen::Matrix<double, kStateDim, 1>;
using CovMatrix = Eigen::Matrix<double, kStateDim, kStateDim>;

/// Full filter state. rot_GI/pos_GI map the IMU frame into the world frame G;
/// rot_IL/pos_IL and rot_IO/pos_IO are the LiDAR and odometry extrinsics.
/// `gravity` follows the accelerometer model a_m = R_GI^T (a + g) + b_a, so a
/// level stationary IMU reads +g and g ~ (0, 0, +9.81).
struct NavState {
  Rotation rot_GI;
  Vec3 pos_GI = Vec3::Zero();
  Vec3 vel_GI = Vec3::Zero();
  Vec3 bias_gyro = Vec3::Zero();
  Vec3 bias_acc = Vec3::Zero();
  Vec3 gravity = Vec3(0.0, 0.0, 9.81);
  Rotation rot_IL;
  Vec3 pos_IL = Vec3::Zero();
  Rotation rot_IO;
  Vec3 pos_IO = Vec3::Zero();
};

/// x [+] dx: rotations are right-perturbed (q * exp(dtheta)), vectors added.
NavState boxplus(const NavState& x, const ErrorState& dx);

/// x1 [-] x2, the inverse of boxplus: boxplus(x2, boxminus(x1, x2)) == x1.
ErrorState boxminus(const NavState& x1, const NavState& x2);

/// (P + P^T) / 2
CovMatrix symmetrized(const CovMatrix& p);

/// True when P is symmetric to `sym_rtol` (relative to max |P_ij|) and its
/// smallest eigenvalue is >= -psd_rtol * trace(P).
bool is_valid_covariance(const CovMatrix& p, double sym_rtol = 1e-9, double psd_rtol = 1e-10);

/// Trajectory-log CSV layout for one state, see state_csv_header().
std::string state_csv_header();
std::string state_to_csv_row(double t, const NavState& x);
/// Parse a row written by state_to_csv_row. Throws std::invalid_argument.
NavState state_from_csv_row(const std::string& row, double* t = nullptr);

}  // namespace gatedlio
