#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gatedlio/imu_propagation.hpp"
#include "gatedlio/local_map.hpp"
#include "gatedlio/state.hpp"

namespace gatedlio {

struct LidarPoint {
  double offset_time = 0.0;  // s, <= 0, relative to scan end
  Vec3 p = Vec3::Zero();     // LiDAR frame, m
};

struct LidarScan {
  double t_end = 0.0;
  std::vector<LidarPoint> points;
};

struct LidarParams {
  double sigma = 0.03;              // per-point noise std along the normal, m
  std::size_t num_neighbors = 5;
  double plane_tol = 0.1;           // m
  double corr_gate = 1.0;           // max |predicted residual|, m
  double max_neighbor_dist = 2.0;   // farthest neighbour allowed, m
  double min_spread_ratio = 0.1;    // second/first principal spread of the neighbours
};

struct PlaneCorrespondence {
  Vec3 point_L = Vec3::Zero();
  PlaneFit plane;
  double noise_var = 0.0;  // m^2
};

using StateRow = Eigen::Matrix<double, 1, kStateDim>;

struct LidarResidualRow {
  double residual = 0.0;   // -h_l(x, p)
  StateRow jacobian = StateRow::Zero();  // dh_l / d(error state)
};

/// Re-express every point in the scan-end LiDAR frame. The IMU pose at each
/// point time is obtained by integrating `imu` backwards from `x_end` with the
/// same piecewise-constant input model the filter uses (interval_input).
/// Throws std::runtime_error when the samples do not cover the scan.
LidarScan undistort(const LidarScan& scan, std::span<const ImuSample> imu, const NavState& x_end);

/// World-frame position of a LiDAR point under state x.
Vec3 lidar_to_world(const NavState& x, const Vec3& p_L);

/// Signed distance of the world-projected point to the correspondence plane:
/// h_l = u^T (R_GI (R_IL p + p_IL) + p_GI - q).
double predict_plane_distance(const PlaneCorrespondence& c, const NavState& x);

/// Match one point: knn, plane fit, neighbour-distance check and residual
/// gate. Returns nullopt when no usable plane is found.
std::optional<PlaneCorrespondence> match_point(const Vec3& p_L, const PointMap& map, const NavState& x,
                                               const LidarParams& params);

/// Correspondences for every matchable point, in scan order. Parallel over
/// points (OpenMP); results are identical to find_correspondences_serial.
std::vector<PlaneCorrespondence> find_correspondences(const LidarScan& scan, const PointMap& map,
                                                      const NavState& x, const LidarParams& params);
std::vector<PlaneCorrespondence> find_correspondences_serial(const LidarScan& scan, const PointMap& map,
                                                             const NavState& x, const LidarParams& params);

/// Residual r_l = -h_l and its Jacobian. Non-zero columns: d theta_GI
/// (-u^T R_GI [R_IL p + p_IL]x), d p_GI (u^T), d theta_IL
/// (-u^T R_GI R_IL [p]x) and d p_IL (u^T R_GI).
LidarResidualRow residual_and_jacobian(const PlaneCorrespondence& c, const NavState& x);

}  // namespace gatedlio
