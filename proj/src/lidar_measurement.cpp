#include "gatedlio/lidar_measurement.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gatedlio {

namespace {

struct Knot {
  double t;
  Rotation rot;
  Vec3 pos;
  Vec3 vel;
  ImuSample input;  // input held over [t, next knot toward scan end]
};

// Inverse of propagate_state's Euler step.
Knot step_back(const Knot& k, const ImuSample& u, double dt, const NavState& x) {
  Knot out;
  out.t = k.t - dt;
  out.input = u;
  out.rot = k.rot * exp_so3(-(u.gyro - x.bias_gyro) * dt);
  const Vec3 a = out.rot * (u.acc - x.bias_acc) - x.gravity;
  out.vel = k.vel - a * dt;
  out.pos = k.pos - k.vel * dt + 0.5 * a * dt * dt;
  return out;
}

}  // namespace

LidarScan undistort(const LidarScan& scan, std::span<const ImuSample> imu, const NavState& x_end) {
  LidarScan out;
  out.t_end = scan.t_end;
  out.points.reserve(scan.points.size());
  if (scan.points.empty()) return out;

  double min_offset = 0.0;
  for (const LidarPoint& lp : scan.points) min_offset = std::min(min_offset, lp.offset_time);
  if (min_offset == 0.0) {
    out.points = scan.points;
    return out;
  }
  const double t_start = scan.t_end + min_offset;
  if (imu.size() < 2 || imu.front().t > t_start || imu.back().t < scan.t_end) {
    std::ostringstream msg;
    msg << "undistort: IMU samples ";
    if (imu.empty()) {
      msg << "empty";
    } else {
      msg << "span [" << imu.front().t << ", " << imu.back().t << "]";
    }
    msg << " do not cover scan interval [" << t_start << ", " << scan.t_end << "]";
    throw std::runtime_error(msg.str());
  }

  // Knots from scan end back to scan start, one per IMU interval boundary.
  std::vector<Knot> knots;
  Knot k{scan.t_end, x_end.rot_GI, x_end.pos_GI, x_end.vel_GI, {}};
  auto it = std::lower_bound(imu.begin(), imu.end(), scan.t_end,
                             [](const ImuSample& s, double t) { return s.t < t; });
  std::size_t hi = static_cast<std::size_t>(it - imu.begin());  // imu[hi].t >= t_end
  if (hi == 0) hi = 1;
  knots.push_back(k);
  while (knots.back().t > t_start) {
    const std::size_t lo = hi - 1;
    const ImuSample u = interval_input(imu[lo], imu[hi]);
    const double seg_start = std::max(imu[lo].t, t_start);
    const double dt = knots.back().t - seg_start;
    if (dt > 0.0) {
      knots.push_back(step_back(knots.back(), u, dt, x_end));
    }
    if (imu[lo].t <= t_start) break;
    if (hi == 1) {
      throw std::runtime_error("undistort: IMU gap before scan start");
    }
    --hi;
  }
  // knots is ordered by decreasing time; knots[j+1] is the start of segment j.

  const Rotation rot_end_inv = x_end.rot_GI.inverse();
  for (const LidarPoint& lp : scan.points) {
    const double t = scan.t_end + lp.offset_time;
    if (lp.offset_time == 0.0) {
      out.points.push_back({0.0, lp.p});
      continue;
    }
    std::size_t j = 0;
    while (j + 1 < knots.size() && knots[j + 1].t > t) ++j;
    const Knot& base = knots[std::min(j + 1, knots.size() - 1)];
    Rotation rot = base.rot;
    Vec3 pos = base.pos;
    const double dt = t - base.t;
    if (dt > 0.0) {
      const ImuSample& u = base.input;
      const Vec3 a = base.rot * (u.acc - x_end.bias_acc) - x_end.gravity;
      rot = base.rot * exp_so3((u.gyro - x_end.bias_gyro) * dt);
      pos = base.pos + base.vel * dt + 0.5 * a * dt * dt;
    }
    const Vec3 world = rot * (x_end.rot_IL * lp.p + x_end.pos_IL) + pos;
    const Vec3 in_imu_end = rot_end_inv * (world - x_end.pos_GI);
    out.points.push_back({0.0, x_end.rot_IL.inverse() * (in_imu_end - x_end.pos_IL)});
  }
  return out;
}

Vec3 lidar_to_world(const NavState& x, const Vec3& p_L) {
  return x.rot_GI * (x.rot_IL * p_L + x.pos_IL) + x.pos_GI;
}

double predict_plane_distance(const PlaneCorrespondence& c, const NavState& x) {
  return c.plane.normal.dot(lidar_to_world(x, c.point_L) - c.plane.anchor);
}

std::optional<PlaneCorrespondence> match_point(const Vec3& p_L, const PointMap& map, const NavState& x,
                                               const LidarParams& params) {
  if (map.size() < params.num_neighbors) return std::nullopt;
  const Vec3 pw = lidar_to_world(x, p_L);
  const std::vector<Neighbor> nn = map.knn(pw, params.num_neighbors);
  if (nn.back().dist2 > params.max_neighbor_dist * params.max_neighbor_dist) return std::nullopt;
  std::vector<Vec3> pts;
  pts.reserve(nn.size());
  for (const Neighbor& n : nn) pts.push_back(n.point);
  PlaneCorrespondence c;
  c.point_L = p_L;
  c.plane = fit_plane(pts, params.plane_tol, params.min_spread_ratio);
  if (!c.plane.valid) return std::nullopt;
  c.noise_var = params.sigma * params.sigma;
  if (std::abs(c.plane.normal.dot(pw - c.plane.anchor)) >= params.corr_gate) return std::nullopt;
  return c;
}

std::vector<PlaneCorrespondence> find_correspondences_serial(const LidarScan& scan, const PointMap& map,
                                                             const NavState& x, const LidarParams& params) {
  std::vector<PlaneCorrespondence> out;
  if (map.empty()) return out;
  out.reserve(scan.points.size());
  for (const LidarPoint& lp : scan.points) {
    if (auto c = match_point(lp.p, map, x, params)) out.push_back(*c);
  }
  return out;
}

std::vector<PlaneCorrespondence> find_correspondences(const LidarScan& scan, const PointMap& map,
                                                      const NavState& x, const LidarParams& params) {
  std::vector<PlaneCorrespondence> out;
  if (map.empty()) return out;
  const auto n = static_cast<std::ptrdiff_t>(scan.points.size());
  std::vector<std::optional<PlaneCorrespondence>> slots(scan.points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    slots[i] = match_point(scan.points[i].p, map, x, params);
  }
  out.reserve(scan.points.size());
  for (auto& s : slots) {
    if (s) out.push_back(*s);
  }
  return out;
}

LidarResidualRow residual_and_jacobian(const PlaneCorrespondence& c, const NavState& x) {
  LidarResidualRow row;
  const Vec3& u = c.plane.normal;
  const Mat3 r_gi = x.rot_GI.matrix();
  const Mat3 r_il = x.rot_IL.matrix();
  const Vec3 p_imu = r_il * c.point_L + x.pos_IL;
  const Vec3 pw = r_gi * p_imu + x.pos_GI;
  row.residual = -u.dot(pw - c.plane.anchor);
  const Eigen::RowVector3d ut = u.transpose();
  row.jacobian.segment<3>(idx::kRot) = -ut * r_gi * skew(p_imu);
  row.jacobian.segment<3>(idx::kPos) = ut;
  row.jacobian.segment<3>(idx::kRotIL) = -ut * r_gi * r_il * skew(c.point_L);
  row.jacobian.segment<3>(idx::kPosIL) = ut * r_gi;
  return row;
}

}  // namespace gatedlio
