#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gatedlio/config.hpp"
#include "gatedlio/evaluation.hpp"
#include "gatedlio/imu_propagation.hpp"
#include "gatedlio/lidar_measurement.hpp"
#include "gatedlio/odometry_measurement.hpp"
#include "gatedlio/simulator.hpp"

namespace gatedlio {

/// Sensor streams of one sequence plus optional ground truth.
struct SensorData {
  std::vector<ImuSample> imu;
  std::vector<OdomPose> odom;
  std::vector<LidarScan> scans;
  std::optional<NavState> initial_state;  // true state at the first IMU sample
  eval::Trajectory ground_truth;          // IMU-frame poses
};

eval::Trajectory ground_truth_trajectory(const std::vector<sim::KinematicState>& gt);
SensorData to_sensor_data(sim::Dataset ds);

/// Directory layout:
///   config.toml            effective configuration that produced the data
///   imu.csv                t,gx,gy,gz,ax,ay,az
///   odom.csv               t,x,y,z,qx,qy,qz,qw   (odometry pose in its origin frame)
///   scans/scan_<k>.csv     "# t_end=<t>" line, then offset_t,x,y,z (LiDAR frame)
///   ground_truth.tum       IMU poses at t = 0 and every scan end
///   initial_state.csv      full true state at t = 0
/// Numbers are written with 17 significant digits so reading back is exact.
void write_dataset(const std::string& dir, const sim::Dataset& ds, const RunConfig& cfg);

/// Reads the layout above. Missing ground_truth.tum / initial_state.csv are
/// allowed. Malformed content or non-increasing timestamps throw
/// std::runtime_error naming the file and line.
SensorData read_dataset(const std::string& dir);

}  // namespace gatedlio
