#include "gatedlio/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace gatedlio {

ImuIntegrator::ImuIntegrator(std::span<const ImuSample> imu, const NoiseParams& noise, NavState x, CovMatrix p,
                             double t)
    : imu_(imu), noise_(noise), x_(std::move(x)), p_(std::move(p)), t_(t) {
  if (imu_.size() < 2) throw std::invalid_argument("ImuIntegrator: need at least 2 IMU samples");
  if (t < imu_.front().t) throw std::invalid_argument("ImuIntegrator: start time precedes the IMU stream");
  while (k_ + 2 < imu_.size() && imu_[k_ + 1].t <= t_) ++k_;
}

void ImuIntegrator::propagate_to(double t) {
  if (t < t_) throw std::invalid_argument("ImuIntegrator: cannot propagate backwards");
  if (t > imu_.back().t) {
    throw std::runtime_error("IMU stream ends at " + std::to_string(imu_.back().t) + " before t = " +
                             std::to_string(t));
  }
  while (t_ < t) {
    while (k_ + 2 < imu_.size() && imu_[k_ + 1].t <= t_) ++k_;
    const ImuSample u = interval_input(imu_[k_], imu_[k_ + 1]);
    const double t_next = std::min(imu_[k_ + 1].t, t);
    const double dt = t_next - t_;
    if (dt > 0.0) {
      const TransitionPair tp = transition_matrices(x_, u, dt);
      p_ = propagate_covariance(p_, tp, noise_, dt);
      x_ = propagate_state(x_, u, dt);
      cov_ok_ = cov_ok_ && is_valid_covariance(p_);
    }
    t_ = t_next;
  }
}

NavState static_initialize(std::span<const ImuSample> imu, double window, const sim::SensorRig& rig) {
  if (imu.empty()) throw std::invalid_argument("static_initialize: no IMU samples");
  const double t_end = imu.front().t + window;
  Vec3 gyro = Vec3::Zero(), acc = Vec3::Zero();
  std::size_t n = 0;
  for (const ImuSample& s : imu) {
    if (s.t > t_end) break;
    gyro += s.gyro;
    acc += s.acc;
    ++n;
  }
  gyro /= static_cast<double>(n);
  acc /= static_cast<double>(n);
  NavState x;
  x.rot_GI = Rotation(Eigen::Quaterniond::FromTwoVectors(acc, Vec3::UnitZ()));
  x.bias_gyro = gyro;
  x.gravity = Vec3(0.0, 0.0, acc.norm());
  x.rot_IL = rig.rot_IL;
  x.pos_IL = rig.pos_IL;
  x.rot_IO = rig.rot_IO;
  x.pos_IO = rig.pos_IO;
  return x;
}

namespace {

LidarScan strided(const LidarScan& scan, std::size_t stride) {
  if (stride <= 1) return scan;
  LidarScan out;
  out.t_end = scan.t_end;
  out.points.reserve(scan.points.size() / stride + 1);
  for (std::size_t i = 0; i < scan.points.size(); i += stride) out.points.push_back(scan.points[i]);
  return out;
}

std::vector<Vec3> world_points(const LidarScan& scan, const NavState& x) {
  std::vector<Vec3> pts;
  pts.reserve(scan.points.size());
  for (const LidarPoint& p : scan.points) pts.push_back(lidar_to_world(x, p.p));
  return pts;
}

std::optional<RelPoseMeasurement> odometry_between(std::span<const OdomPose> odom, double t_prev, double t,
                                                   const OdomNoiseParams& noise) {
  // Only readings available by t (within the extrapolation tolerance).
  const auto end = std::upper_bound(odom.begin(), odom.end(), t + kOdomExtrapolationTol,
                                    [](double v, const OdomPose& o) { return v < o.t; });
  const std::span<const OdomPose> buf(odom.begin(), end);
  if (buf.size() < 2) return std::nullopt;
  try {
    return relative_measurement(interpolate_pose(buf, t_prev), interpolate_pose(buf, t), noise);
  } catch (const std::out_of_range&) {
    return std::nullopt;
  }
}

}  // namespace

RunResult run_filter(const SensorData& data, const RunConfig& cfg, const UpdateObserver& observer) {
  const FilterConfig& fc = cfg.filter;
  if (data.imu.size() < 2) throw std::invalid_argument("run_filter: need at least 2 IMU samples");
  NavState x0;
  if (fc.init == InitMode::kGroundTruth) {
    if (!data.initial_state) throw std::invalid_argument("run_filter: ground_truth init needs initial_state.csv");
    x0 = *data.initial_state;
  } else {
    x0 = static_initialize(data.imu, fc.static_init_time, cfg.sim.rig);
  }
  const double t0 = data.imu.front().t;
  ImuIntegrator integ(data.imu, fc.imu_noise, x0, fc.p0.matrix(), t0);
  PointMap map(fc.map);

  RunResult out;
  out.trajectory.push_back({t0, x0.pos_GI, x0.rot_GI});
  std::optional<NavState> x_prev;
  double t_prev = t0;

  for (const LidarScan& raw : data.scans) {
    if (raw.t_end <= t0) continue;
    integ.propagate_to(raw.t_end);
    const auto wall0 = std::chrono::steady_clock::now();
    const NavState x_pred = integ.state();
    const LidarScan full = undistort(raw, data.imu, x_pred);

    ScanDiagnostics d;
    d.t = raw.t_end;
    NavState x_post = x_pred;
    if (map.empty()) {
      d.converged = true;
    } else {
      std::optional<OdometryInput> odom;
      if (x_prev) {
        if (auto m = odometry_between(data.odom, t_prev, raw.t_end, fc.odom)) odom = OdometryInput{*m, *x_prev};
      }
      const LidarScan scan = strided(full, fc.point_stride);
      const UpdateResult res = iterated_update(x_pred, integ.cov(), scan, map, odom, fc.iekf);
      if (observer) observer(UpdateContext{scan, map, x_pred, res, odom});
      x_post = res.state;
      integ.reset(res.state, res.cov);
      d.iterations = res.iterations;
      d.converged = res.converged;
      d.n_points = res.n_points;
      d.degenerate = res.report.degenerate;
      d.used_odometry = res.used_odometry;
      d.odometry_fallback = res.odometry_fallback;
      d.cost = res.final_cost;
      d.eig_rot = res.report.eig_rot;
      d.eig_trans = res.report.eig_trans;
      for (const IterationTrace& tr : res.trace) {
        if (tr.cost_after > tr.cost_before + 1e-12 * std::max(1.0, std::abs(tr.cost_before))) d.cost_monotone = false;
      }
      d.cov_ok = is_valid_covariance(res.cov);
    }
    map.insert_scan(world_points(full, x_post));
    d.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wall0).count();

    out.cov_ok = out.cov_ok && d.cov_ok;
    out.cost_monotone = out.cost_monotone && d.cost_monotone;
    if (d.used_odometry && !d.degenerate && fc.iekf.mode == FusionMode::kDegenerationGated) out.gating_ok = false;
    if (d.used_odometry && fc.iekf.mode == FusionMode::kLidarOnly) out.gating_ok = false;
    out.diagnostics.push_back(d);
    out.trajectory.push_back({raw.t_end, x_post.pos_GI, x_post.rot_GI});
    x_prev = x_post;
    t_prev = raw.t_end;
  }
  out.cov_ok = out.cov_ok && integ.cov_ok();
  out.final_state = integ.state();
  out.final_cov = integ.cov();
  return out;
}

void write_diagnostics_csv(const std::string& path, const std::vector<ScanDiagnostics>& diag) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + path);
  std::fprintf(f,
               "t,iterations,converged,n_points,degenerate,used_odometry,cost,odometry_fallback,"
               "eig_rot_0,eig_rot_1,eig_rot_2,eig_trans_0,eig_trans_1,eig_trans_2,cov_ok,cost_monotone,wall_ms\n");
  for (const auto& d : diag) {
    std::fprintf(f, "%.6f,%d,%d,%zu,%d,%d,%.9g,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d,%d,%.3f\n", d.t, d.iterations,
                 d.converged, d.n_points, d.degenerate, d.used_odometry, d.cost, d.odometry_fallback, d.eig_rot[0],
                 d.eig_rot[1], d.eig_rot[2], d.eig_trans[0], d.eig_trans[1], d.eig_trans[2], d.cov_ok,
                 d.cost_monotone, d.wall_ms);
  }
  std::fclose(f);
}

void write_run_outputs(const std::string& out_dir, const RunResult& r, const RunConfig& cfg) {
  fs::create_directories(out_dir);
  eval::write_tum_file((fs::path(out_dir) / "trajectory.tum").string(), r.trajectory);
  write_diagnostics_csv((fs::path(out_dir) / "diagnostics.csv").string(), r.diagnostics);
  std::ofstream os(fs::path(out_dir) / "config.toml");
  os << to_toml(cfg);
}

}  // namespace gatedlio
