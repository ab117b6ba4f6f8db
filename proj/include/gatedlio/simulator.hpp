#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gatedlio/imu_propagation.hpp"
#include "gatedlio/lidar_measurement.hpp"
#include "gatedlio/odometry_measurement.hpp"
#include "gatedlio/state.hpp"

namespace gatedlio::sim {

/// Finite rectangle: center + axis_u * [-half_u, half_u] + axis_v * [-half_v, half_v].
struct Patch {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 axis_u = Vec3::UnitX();
  Vec3 axis_v = Vec3::UnitY();
  double half_u = 1.0;
  double half_v = 1.0;
};

struct World {
  std::vector<Patch> patches;
};

/// Axis-aligned corridor along +x: x in [0, length], y in [-width/2, width/2],
/// z in [0, height]. Floor, ceiling and two side walls; end caps optional.
World build_corridor(double length = 40.0, double width = 4.0, double height = 3.0, bool with_end_caps = false);
/// Closed box centred on the origin in x/y, z in [0, height].
World build_room(double size_x = 8.0, double size_y = 8.0, double height = 3.0);

struct RayHit {
  double range = 0.0;
  std::size_t patch = 0;
};

/// Nearest intersection of origin + s * dir (dir unit) with any patch, s in
/// (0, max_range].
std::optional<RayHit> raycast(const World& world, const Vec3& origin, const Vec3& dir, double max_range);

/// Parametric motion: a stationary phase, then a smooth (quintic) ramp up to a
/// constant forward speed along +x, with sinusoidal lateral/vertical and
/// attitude sway faded in over the same ramp. Yaw may additionally grow at a
/// constant rate. Position is C3 and attitude C2 in time.
struct TrajectorySpec {
  Vec3 start = Vec3(4.0, 0.0, 1.0);
  double stationary_time = 1.0;  // s
  double ramp_time = 2.0;        // s; 0 switches speed and sway on instantly
  double speed = 1.0;            // m/s along +x
  double sway_y = 0.1, sway_z = 0.1;             // m
  double sway_freq_y = 0.23, sway_freq_z = 0.31;  // Hz
  double sway_att = 5.0 * 3.14159265358979323846 / 180.0;  // rad, roll/pitch/yaw amplitude
  Vec3 sway_att_freq = Vec3(0.17, 0.13, 0.11);            // Hz, roll/pitch/yaw
  double yaw0 = 0.0;      // rad
  double yaw_rate = 0.0;  // rad/s, applied from t = 0
};

/// Ground-truth kinematics of the IMU frame at one instant.
struct KinematicState {
  double t = 0.0;
  Rotation rot;               // R_GI
  Vec3 pos = Vec3::Zero();    // world
  Vec3 vel = Vec3::Zero();    // world
  Vec3 acc = Vec3::Zero();    // world, kinematic (no gravity)
  Vec3 omega = Vec3::Zero();  // body angular rate, R^T dR/dt = [omega]x
};

KinematicState sample_trajectory(const TrajectorySpec& spec, double t);

struct LidarPattern {
  std::vector<double> elevations;  // rad
  double azimuth_res = 1.0 * 3.14159265358979323846 / 180.0;  // rad
  double rate = 10.0;       // Hz
  double max_range = 20.0;  // m
  double drop_prob = 0.0;   // uniform per-ray dropout

  /// 16 beams, +-15 deg in 2 deg steps.
  static LidarPattern vlp16();
  std::size_t columns() const;
};

struct SensorRig {
  Rotation rot_IL;
  Vec3 pos_IL = Vec3(0.1, 0.0, 0.2);
  Rotation rot_IO;
  Vec3 pos_IO = Vec3(0.0, 0.0, -0.3);
  LidarPattern lidar = LidarPattern::vlp16();
  double imu_rate = 200.0;   // Hz
  double odom_rate = 50.0;   // Hz
};

/// Default rig with small, non-trivial extrinsic rotations.
SensorRig default_rig();

/// One IMU reading at time t with the given true biases. White noise is
/// drawn with discrete std sigma * sqrt(rate).
ImuSample synth_imu(const TrajectorySpec& traj, double t, const Vec3& bias_gyro, const Vec3& bias_acc,
                    const Vec3& gravity, const NoiseParams& noise, double rate, std::mt19937_64& rng);

struct ImuStream {
  std::vector<ImuSample> samples;
  std::vector<Vec3> bias_gyro;  // true bias at each sample
  std::vector<Vec3> bias_acc;
};

/// Samples at k / rate for t in [t0, t1]; biases follow a random walk with
/// discrete std sigma_w / sqrt(rate) per step.
ImuStream synth_imu_stream(const TrajectorySpec& traj, double t0, double t1, const Vec3& bias_gyro0,
                           const Vec3& bias_acc0, const Vec3& gravity, const NoiseParams& noise, double rate,
                           std::uint64_t seed);

/// One revolution ending at scan_end_t. Column j fires at
/// scan_end_t - (ncols - 1 - j) / (ncols * rate); points are in the LiDAR
/// frame at their fire time. With distort = false every ray is cast from the
/// scan-end pose and offsets are recorded as 0.
LidarScan raycast_scan(const World& world, const TrajectorySpec& traj, double scan_end_t, const SensorRig& rig,
                       double sigma_l, std::uint64_t seed, bool distort = true);

struct OdomSynthParams {
  double noise_r = 1e-3;  // rad per step, per axis
  double noise_p = 0.02;  // m per m travelled, per axis
  double drift = 0.0;     // systematic translation scale error
  Rotation origin_rot = Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(0.5, Vec3::UnitZ())));
  Vec3 origin_pos = Vec3(1.0, -2.0, 0.5);  // ^M T_G translation
};

/// Odometry poses ^M T_O at k / rate for t in [t0, t1]: true relative motion
/// between consecutive outputs, corrupted per step, integrated from
/// ^M T_G * ^G T_O(t0).
std::vector<OdomPose> synth_odometry(const TrajectorySpec& traj, const SensorRig& rig, double t0, double t1,
                                     double rate, const OdomSynthParams& params, std::uint64_t seed);

struct SimConfig {
  std::string world = "corridor";  // "corridor" or "room"
  double corridor_length = 40.0, corridor_width = 4.0, corridor_height = 3.0;
  bool end_caps = false;
  double room_x = 8.0, room_y = 8.0, room_z = 3.0;
  TrajectorySpec trajectory;
  SensorRig rig = default_rig();
  double duration = 20.0;  // s
  double sigma_l = 0.03;   // m
  bool distort = true;
  NoiseParams imu_noise;
  double init_bias_gyro_std = 1e-3;  // per-seed initial biases ~ N(0, std^2)
  double init_bias_acc_std = 1e-2;
  Vec3 gravity = Vec3(0.0, 0.0, 9.81);
  OdomSynthParams odom;
  std::uint64_t seed = 1;
};

World build_world(const SimConfig& cfg);

struct Dataset {
  SimConfig config;
  NavState initial_state;             // truth at t = 0
  std::vector<ImuSample> imu;
  std::vector<OdomPose> odom;
  std::vector<LidarScan> scans;       // t_end = k / lidar rate, k >= 1
  std::vector<KinematicState> ground_truth;  // at t = 0 and every scan end
};

/// Pure function of cfg: every random stream is seeded from cfg.seed.
Dataset generate_dataset(const SimConfig& cfg);

/// Independent generator for (seed, stream) pairs.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream);

}  // namespace gatedlio::sim
