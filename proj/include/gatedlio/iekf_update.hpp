#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "gatedlio/degeneracy.hpp"
#include "gatedlio/lidar_measurement.hpp"
#include "gatedlio/local_map.hpp"
#include "gatedlio/odometry_measurement.hpp"
#include "gatedlio/state.hpp"

namespace gatedlio {

enum class FusionMode { kLidarOnly, kDegenerationGated, kAlwaysFused };

std::string_view to_string(FusionMode mode);
/// Accepts "lidar_only", "degeneration_gated", "always_fused".
FusionMode fusion_mode_from_string(std::string_view s);

struct IekfParams {
  int max_iter = 4;
  double step_tol = 1e-6;
  bool joseph_form = false;
  bool freeze_lidar_extrinsic = true;
  bool freeze_odom_extrinsic = true;
  // Correspondences are reused while the pose moves less than this between
  // iterations.
  double reuse_trans = 1e-3;                                  // m
  double reuse_rot = 0.01 * 3.14159265358979323846 / 180.0;  // rad
  FusionMode mode = FusionMode::kDegenerationGated;
  DegeneracyThresholds thresholds;
  LidarParams lidar;
};

/// Stacked residuals r ~= H dx + v with block-diagonal noise
/// diag(lidar variances, R_rot, R_pos).
struct MeasurementStack {
  Eigen::VectorXd residual;
  Eigen::Matrix<double, Eigen::Dynamic, kStateDim> jacobian;
  std::vector<double> lidar_var;
  Mat3 cov_rot = Mat3::Identity();
  Mat3 cov_pos = Mat3::Identity();
  bool used_odometry = false;

  std::size_t rows() const { return static_cast<std::size_t>(residual.size()); }
  std::size_t lidar_rows() const { return lidar_var.size(); }
  /// H^T R^-1 H
  CovMatrix information() const;
  /// H^T R^-1 r
  ErrorState information_vector() const;
  /// r^T R^-1 r
  double weighted_sq_norm() const;
};

/// LiDAR rows always; the 6 odometry rows are appended only when the mode
/// allows it: never for kLidarOnly, only on a degenerate report for
/// kDegenerationGated, whenever available for kAlwaysFused.
MeasurementStack build_stack(std::span<const LidarResidualRow> rows, std::span<const double> lidar_var,
                             const std::optional<OdomResidual>& odom,
                             const std::optional<RelPoseMeasurement>& odom_meas,
                             const DegeneracyReport& report, FusionMode mode);

/// Derivative of (x_kappa [+] d) [-] x_hat at d = 0:
/// diag(A(dth_GI)^-T, I15, A(dth_IL)^-T, I3, A(dth_IO)^-T, I3).
CovMatrix m_matrix(const NavState& x_kappa, const NavState& x_hat);

struct OdometryInput {
  RelPoseMeasurement meas;
  NavState x_prev;  // updated state at the previous scan
};

struct IterationTrace {
  double cost_before = 0.0;  // cost at the linearization point
  double cost_after = 0.0;   // cost after the accepted step, same correspondences
  double step_norm = 0.0;
  bool reused_correspondences = false;
};

struct UpdateResult {
  NavState state;
  CovMatrix cov = CovMatrix::Zero();
  int iterations = 0;
  bool converged = false;
  double final_cost = 0.0;
  std::size_t n_points = 0;
  bool used_odometry = false;
  bool odometry_fallback = false;  // degenerate but no odometry available
  DegeneracyReport report;
  std::vector<IterationTrace> trace;
};

/// Iterated Kalman update (Gauss-Newton on prior + measurement cost).
/// Degeneracy is decided once at the first linearization and held for all
/// iterations. With no valid correspondences the prediction is returned with
/// converged = false.
UpdateResult iterated_update(const NavState& x_pred, const CovMatrix& p_pred, const LidarScan& scan,
                             const PointMap& map, const std::optional<OdometryInput>& odom,
                             const IekfParams& params);

}  // namespace gatedlio
