#include "gatedlio/simulator.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gatedlio::sim {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

Vec3 gaussian3(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double x = n(rng);
  const double y = n(rng);
  const double z = n(rng);
  return {x, y, z};
}

Patch make_patch(const Vec3& center, const Vec3& normal, const Vec3& u, double half_u, double half_v) {
  Patch p;
  p.center = center;
  p.normal = normal.normalized();
  p.axis_u = u.normalized();
  p.axis_v = p.normal.cross(p.axis_u).normalized();
  p.half_u = half_u;
  p.half_v = half_v;
  return p;
}

// Quintic smoothstep and its derivatives / integral on [0, 1].
struct Envelope {
  double e = 0.0, de = 0.0, dde = 0.0;
  double integral = 0.0;  // int_ts^t e(s) ds
};

Envelope envelope(const TrajectorySpec& s, double t) {
  Envelope env;
  const double tau = t - s.stationary_time;
  if (tau <= 0.0) return env;
  if (s.ramp_time <= 0.0) {
    env.e = 1.0;
    env.integral = tau;
    return env;
  }
  const double u = tau / s.ramp_time;
  if (u >= 1.0) {
    env.e = 1.0;
    env.integral = 0.5 * s.ramp_time + (tau - s.ramp_time);
    return env;
  }
  const double u2 = u * u, u3 = u2 * u;
  env.e = u3 * (10.0 - 15.0 * u + 6.0 * u2);
  env.de = 30.0 * u2 * (1.0 - 2.0 * u + u2) / s.ramp_time;
  env.dde = (60.0 * u - 180.0 * u2 + 120.0 * u3) / (s.ramp_time * s.ramp_time);
  env.integral = s.ramp_time * u2 * u2 * (2.5 - 3.0 * u + u2);
  return env;
}

// f = amp * e(t) * sin(w tau) and its first two time derivatives.
Vec3 sway(const Envelope& env, double amp, double freq, double tau) {
  const double w = kTwoPi * freq;
  const double s = std::sin(w * tau), c = std::cos(w * tau);
  return amp * Vec3(env.e * s, env.de * s + env.e * w * c, env.dde * s + 2.0 * env.de * w * c - env.e * w * w * s);
}

}  // namespace

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

World build_corridor(double length, double width, double height, bool with_end_caps) {
  if (!(length > 0.0 && width > 0.0 && height > 0.0)) throw std::invalid_argument("build_corridor: dimensions must be positive");
  World w;
  const double hl = 0.5 * length, hw = 0.5 * width, hh = 0.5 * height;
  w.patches.push_back(make_patch({hl, 0.0, 0.0}, Vec3::UnitZ(), Vec3::UnitX(), hl, hw));      // floor
  w.patches.push_back(make_patch({hl, 0.0, height}, -Vec3::UnitZ(), Vec3::UnitX(), hl, hw));  // ceiling
  w.patches.push_back(make_patch({hl, -hw, hh}, Vec3::UnitY(), Vec3::UnitX(), hl, hh));       // right wall
  w.patches.push_back(make_patch({hl, hw, hh}, -Vec3::UnitY(), Vec3::UnitX(), hl, hh));       // left wall
  if (with_end_caps) {
    w.patches.push_back(make_patch({0.0, 0.0, hh}, Vec3::UnitX(), Vec3::UnitY(), hw, hh));
    w.patches.push_back(make_patch({length, 0.0, hh}, -Vec3::UnitX(), Vec3::UnitY(), hw, hh));
  }
  return w;
}

World build_room(double size_x, double size_y, double height) {
  if (!(size_x > 0.0 && size_y > 0.0 && height > 0.0)) throw std::invalid_argument("build_room: dimensions must be positive");
  World w;
  const double hx = 0.5 * size_x, hy = 0.5 * size_y, hh = 0.5 * height;
  w.patches.push_back(make_patch({0.0, 0.0, 0.0}, Vec3::UnitZ(), Vec3::UnitX(), hx, hy));
  w.patches.push_back(make_patch({0.0, 0.0, height}, -Vec3::UnitZ(), Vec3::UnitX(), hx, hy));
  w.patches.push_back(make_patch({0.0, -hy, hh}, Vec3::UnitY(), Vec3::UnitX(), hx, hh));
  w.patches.push_back(make_patch({0.0, hy, hh}, -Vec3::UnitY(), Vec3::UnitX(), hx, hh));
  w.patches.push_back(make_patch({-hx, 0.0, hh}, Vec3::UnitX(), Vec3::UnitY(), hy, hh));
  w.patches.push_back(make_patch({hx, 0.0, hh}, -Vec3::UnitX(), Vec3::UnitY(), hy, hh));
  return w;
}

std::optional<RayHit> raycast(const World& world, const Vec3& origin, const Vec3& dir, double max_range) {
  std::optional<RayHit> best;
  for (std::size_t i = 0; i < world.patches.size(); ++i) {
    const Patch& p = world.patches[i];
    const double denom = p.normal.dot(dir);
    if (std::abs(denom) < 1e-12) continue;
    const double s = p.normal.dot(p.center - origin) / denom;
    if (!(s > 1e-9) || s > max_range) continue;
    if (best && s >= best->range) continue;
    const Vec3 rel = origin + s * dir - p.center;
    if (std::abs(rel.dot(p.axis_u)) > p.half_u || std::abs(rel.dot(p.axis_v)) > p.half_v) continue;
    best = RayHit{s, i};
  }
  return best;
}

KinematicState sample_trajectory(const TrajectorySpec& s, double t) {
  KinematicState k;
  k.t = t;
  const Envelope env = envelope(s, t);
  const double tau = t - s.stationary_time;

  const Vec3 fy = sway(env, s.sway_y, s.sway_freq_y, tau);
  const Vec3 fz = sway(env, s.sway_z, s.sway_freq_z, tau);
  k.pos = s.start + Vec3(s.speed * env.integral, fy[0], fz[0]);
  k.vel = Vec3(s.speed * env.e, fy[1], fz[1]);
  k.acc = Vec3(s.speed * env.de, fy[2], fz[2]);

  const Vec3 roll = sway(env, s.sway_att, s.sway_att_freq[0], tau);
  const Vec3 pitch = sway(env, s.sway_att, s.sway_att_freq[1], tau);
  const Vec3 yaw_sway = sway(env, s.sway_att, s.sway_att_freq[2], tau);
  const double phi = roll[0], dphi = roll[1];
  const double theta = pitch[0], dtheta = pitch[1];
  const double psi = s.yaw0 + s.yaw_rate * t + yaw_sway[0];
  const double dpsi = s.yaw_rate + yaw_sway[1];

  const Eigen::Quaterniond q = Eigen::AngleAxisd(psi, Vec3::UnitZ()) * Eigen::AngleAxisd(theta, Vec3::UnitY()) *
                               Eigen::AngleAxisd(phi, Vec3::UnitX());
  k.rot = Rotation(q);
  const double sp = std::sin(phi), cp = std::cos(phi);
  const double st = std::sin(theta), ct = std::cos(theta);
  k.omega = Vec3(dphi - dpsi * st, dtheta * cp + dpsi * sp * ct, -dtheta * sp + dpsi * cp * ct);
  return k;
}

LidarPattern LidarPattern::vlp16() {
  LidarPattern p;
  for (int i = 0; i < 16; ++i) p.elevations.push_back((-15.0 + 2.0 * i) * 3.14159265358979323846 / 180.0);
  return p;
}

std::size_t LidarPattern::columns() const {
  return static_cast<std::size_t>(std::lround(kTwoPi / azimuth_res));
}

SensorRig default_rig() {
  SensorRig rig;
  rig.rot_IL = Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(0.02, Vec3(1.0, 0.5, 0.0).normalized())));
  rig.rot_IO = Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(0.1, Vec3::UnitZ())));
  return rig;
}

ImuSample synth_imu(const TrajectorySpec& traj, double t, const Vec3& bias_gyro, const Vec3& bias_acc,
                    const Vec3& gravity, const NoiseParams& noise, double rate, std::mt19937_64& rng) {
  const KinematicState k = sample_trajectory(traj, t);
  const double scale = std::sqrt(rate);
  ImuSample s;
  s.t = t;
  s.gyro = k.omega + bias_gyro + noise.sigma_g * scale * gaussian3(rng);
  s.acc = k.rot.inverse() * (k.acc + gravity) + bias_acc + noise.sigma_a * scale * gaussian3(rng);
  return s;
}

ImuStream synth_imu_stream(const TrajectorySpec& traj, double t0, double t1, const Vec3& bias_gyro0,
                           const Vec3& bias_acc0, const Vec3& gravity, const NoiseParams& noise, double rate,
                           std::uint64_t seed) {
  if (!(rate > 0.0)) throw std::invalid_argument("synth_imu_stream: rate must be positive");
  std::mt19937_64 rng = make_rng(seed, 1);
  ImuStream out;
  Vec3 bg = bias_gyro0, ba = bias_acc0;
  const double walk = 1.0 / std::sqrt(rate);
  const auto k0 = static_cast<long long>(std::ceil(t0 * rate - 1e-9));
  const auto k1 = static_cast<long long>(std::floor(t1 * rate + 1e-9));
  for (long long k = k0; k <= k1; ++k) {
    const double t = static_cast<double>(k) / rate;
    out.samples.push_back(synth_imu(traj, t, bg, ba, gravity, noise, rate, rng));
    out.bias_gyro.push_back(bg);
    out.bias_acc.push_back(ba);
    bg += noise.sigma_wg * walk * gaussian3(rng);
    ba += noise.sigma_wa * walk * gaussian3(rng);
  }
  return out;
}

LidarScan raycast_scan(const World& world, const TrajectorySpec& traj, double scan_end_t, const SensorRig& rig,
                       double sigma_l, std::uint64_t seed, bool distort) {
  const LidarPattern& pat = rig.lidar;
  const std::size_t ncols = pat.columns();
  std::mt19937_64 rng = make_rng(seed, 3);
  std::normal_distribution<double> range_noise(0.0, 1.0);
  std::uniform_real_distribution<double> drop(0.0, 1.0);

  LidarScan scan;
  scan.t_end = scan_end_t;
  scan.points.reserve(ncols * pat.elevations.size());
  const KinematicState at_end = sample_trajectory(traj, scan_end_t);
  for (std::size_t j = 0; j < ncols; ++j) {
    const double offset = -static_cast<double>(ncols - 1 - j) / (static_cast<double>(ncols) * pat.rate);
    const KinematicState k = distort ? sample_trajectory(traj, scan_end_t + offset) : at_end;
    const Mat3 r_gl = (k.rot * rig.rot_IL).matrix();
    const Vec3 origin = k.pos + k.rot * rig.pos_IL;
    const double az = static_cast<double>(j) * pat.azimuth_res;
    for (double el : pat.elevations) {
      const Vec3 dir_l(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      const auto hit = raycast(world, origin, r_gl * dir_l, pat.max_range);
      if (!hit) continue;
      if (pat.drop_prob > 0.0 && drop(rng) < pat.drop_prob) continue;
      const double r = hit->range + (sigma_l > 0.0 ? sigma_l * range_noise(rng) : 0.0);
      if (r <= 0.0) continue;
      scan.points.push_back({distort ? offset : 0.0, r * dir_l});
    }
  }
  return scan;
}

std::vector<OdomPose> synth_odometry(const TrajectorySpec& traj, const SensorRig& rig, double t0, double t1,
                                     double rate, const OdomSynthParams& params, std::uint64_t seed) {
  if (!(rate > 0.0)) throw std::invalid_argument("synth_odometry: rate must be positive");
  std::mt19937_64 rng = make_rng(seed, 2);
  auto odom_pose = [&](double t) {
    const KinematicState k = sample_trajectory(traj, t);
    return std::pair<Rotation, Vec3>(k.rot * rig.rot_IO, k.pos + k.rot * rig.pos_IO);
  };

  std::vector<OdomPose> out;
  const auto k0 = static_cast<long long>(std::ceil(t0 * rate - 1e-9));
  const auto k1 = static_cast<long long>(std::floor(t1 * rate + 1e-9));
  std::pair<Rotation, Vec3> prev;
  for (long long k = k0; k <= k1; ++k) {
    const double t = static_cast<double>(k) / rate;
    const auto cur = odom_pose(t);
    OdomPose o;
    o.t = t;
    if (out.empty()) {
      o.rot = params.origin_rot * cur.first;
      o.pos = params.origin_rot * cur.second + params.origin_pos;
    } else {
      const Rotation d_rot = prev.first.inverse() * cur.first;
      const Vec3 d_pos = prev.first.inverse() * (cur.second - prev.second);
      const Rotation n_rot = d_rot * exp_so3(params.noise_r * gaussian3(rng));
      const Vec3 n_pos = (1.0 + params.drift) * d_pos + params.noise_p * d_pos.norm() * gaussian3(rng);
      const OdomPose& last = out.back();
      o.rot = last.rot * n_rot;
      o.pos = last.pos + last.rot * n_pos;
    }
    out.push_back(o);
    prev = cur;
  }
  return out;
}

World build_world(const SimConfig& cfg) {
  if (cfg.world == "corridor") {
    return build_corridor(cfg.corridor_length, cfg.corridor_width, cfg.corridor_height, cfg.end_caps);
  }
  if (cfg.world == "room") return build_room(cfg.room_x, cfg.room_y, cfg.room_z);
  throw std::invalid_argument("unknown world '" + cfg.world + "' (expected corridor or room)");
}

Dataset generate_dataset(const SimConfig& cfg) {
  if (!(cfg.duration > 0.0)) throw std::invalid_argument("generate_dataset: duration must be positive");
  Dataset ds;
  ds.config = cfg;
  const World world = build_world(cfg);

  std::mt19937_64 bias_rng = make_rng(cfg.seed, 0);
  const Vec3 bg0 = cfg.init_bias_gyro_std * gaussian3(bias_rng);
  const Vec3 ba0 = cfg.init_bias_acc_std * gaussian3(bias_rng);

  const ImuStream imu = synth_imu_stream(cfg.trajectory, 0.0, cfg.duration, bg0, ba0, cfg.gravity, cfg.imu_noise,
                                         cfg.rig.imu_rate, cfg.seed);
  ds.imu = imu.samples;
  ds.odom = synth_odometry(cfg.trajectory, cfg.rig, 0.0, cfg.duration, cfg.rig.odom_rate, cfg.odom, cfg.seed);

  const KinematicState k0 = sample_trajectory(cfg.trajectory, 0.0);
  NavState& x0 = ds.initial_state;
  x0.rot_GI = k0.rot;
  x0.pos_GI = k0.pos;
  x0.vel_GI = k0.vel;
  x0.bias_gyro = bg0;
  x0.bias_acc = ba0;
  x0.gravity = cfg.gravity;
  x0.rot_IL = cfg.rig.rot_IL;
  x0.pos_IL = cfg.rig.pos_IL;
  x0.rot_IO = cfg.rig.rot_IO;
  x0.pos_IO = cfg.rig.pos_IO;

  ds.ground_truth.push_back(k0);
  const double rate = cfg.rig.lidar.rate;
  const auto n_scans = static_cast<long long>(std::floor(cfg.duration * rate + 1e-9));
  for (long long k = 1; k <= n_scans; ++k) {
    const double t_end = static_cast<double>(k) / rate;
    const std::uint64_t scan_seed = cfg.seed * 1000003ULL + static_cast<std::uint64_t>(k);
    ds.scans.push_back(raycast_scan(world, cfg.trajectory, t_end, cfg.rig, cfg.sigma_l, scan_seed, cfg.distort));
    ds.ground_truth.push_back(sample_trajectory(cfg.trajectory, t_end));
  }
  return ds;
}

}  // namespace gatedlio::sim
