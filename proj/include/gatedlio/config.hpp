#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gatedlio/iekf_update.hpp"
#include "gatedlio/imu_propagation.hpp"
#include "gatedlio/local_map.hpp"
#include "gatedlio/odometry_measurement.hpp"
#include "gatedlio/simulator.hpp"

namespace gatedlio {

/// Diagonal of the initial covariance, per 3-block (variances).
struct InitialCovariance {
  double rot = 1e-4;
  double pos = 1e-4;
  double vel = 1e-2;
  double bias_gyro = 1e-4;
  double bias_acc = 1e-4;
  double gravity = 1e-4;
  double extrinsic = 1e-6;

  CovMatrix matrix() const;
};

enum class InitMode { kStatic, kGroundTruth };

struct FilterConfig {
  IekfParams iekf;
  NoiseParams imu_noise;
  MapParams map;
  OdomNoiseParams odom;
  InitialCovariance p0;
  InitMode init = InitMode::kStatic;
  double static_init_time = 1.0;  // s of stationary IMU averaged for static init
  std::size_t point_stride = 1;   // use every n-th scan point for matching
};

struct CampaignSpec {
  std::vector<double> sigmas{0.03, 0.05, 0.07, 0.09};  // m
  int runs = 20;
  std::vector<FusionMode> modes{FusionMode::kDegenerationGated, FusionMode::kLidarOnly};
  std::uint64_t seed_base = 1;
};

/// Everything a run needs. The simulator rig extrinsics double as the
/// filter's (known) extrinsics, and [imu_noise] feeds both the simulator and
/// the filter.
struct RunConfig {
  FilterConfig filter;
  sim::SimConfig sim;
  CampaignSpec campaign;
};

/// Parse TOML text. Unknown sections or keys, wrong value types and invalid
/// values throw std::invalid_argument naming the offending key.
RunConfig parse_config(const std::string& toml_text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);
/// Full effective configuration as TOML; parse_config(to_toml(c)) == c.
std::string to_toml(const RunConfig& cfg);

std::string_view to_string(InitMode mode);

}  // namespace gatedlio
