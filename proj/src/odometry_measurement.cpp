#include "gatedlio/odometry_measurement.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace gatedlio {

namespace {

OdomPose blend(const OdomPose& a, const OdomPose& b, double t) {
  const double s = (t - a.t) / (b.t - a.t);
  OdomPose out;
  out.t = t;
  out.pos = a.pos + s * (b.pos - a.pos);
  out.rot = slerp(a.rot, b.rot, s);
  return out;
}

}  // namespace

OdomPose interpolate_pose(std::span<const OdomPose> buffer, double t) {
  if (buffer.empty()) throw std::out_of_range("interpolate_pose: empty odometry buffer");
  const double lo = buffer.front().t;
  const double hi = buffer.back().t;
  if (t < lo - kOdomExtrapolationTol || t > hi + kOdomExtrapolationTol) {
    std::ostringstream msg;
    msg << "interpolate_pose: t=" << t << " outside odometry span [" << lo << ", " << hi << "]";
    throw std::out_of_range(msg.str());
  }
  if (buffer.size() == 1) {
    if (t != lo) throw std::out_of_range("interpolate_pose: single-sample buffer");
    return buffer.front();
  }
  auto it = std::lower_bound(buffer.begin(), buffer.end(), t,
                             [](const OdomPose& p, double v) { return p.t < v; });
  if (it != buffer.end() && it->t == t) return *it;
  std::size_t i1 = static_cast<std::size_t>(it - buffer.begin());
  i1 = std::clamp<std::size_t>(i1, 1, buffer.size() - 1);
  return blend(buffer[i1 - 1], buffer[i1], t);
}

RelPoseMeasurement relative_measurement(const OdomPose& a, const OdomPose& b, const OdomNoiseParams& noise) {
  RelPoseMeasurement m;
  const Rotation a_inv = a.rot.inverse();
  m.z_rot = a_inv * b.rot;
  m.z_pos = a_inv * (b.pos - a.pos);
  const double sr = noise.sigma_rot;
  const double sp = std::max(noise.sigma_pos_floor, noise.sigma_pos_per_m * m.z_pos.norm());
  m.cov_rot = Mat3::Identity() * sr * sr;
  m.cov_pos = Mat3::Identity() * sp * sp;
  return m;
}

Rotation predict_relative_rotation(const NavState& x_k, const NavState& x_prev) {
  return (x_prev.rot_GI * x_k.rot_IO).inverse() * (x_k.rot_GI * x_k.rot_IO);
}

Vec3 predict_relative_translation(const NavState& x_k, const NavState& x_prev) {
  const Vec3 p1 = x_k.rot_GI * x_k.pos_IO - x_prev.rot_GI * x_k.pos_IO + x_k.pos_GI - x_prev.pos_GI;
  return (x_prev.rot_GI * x_k.rot_IO).inverse() * p1;
}

OdomResidual residual_and_jacobian(const RelPoseMeasurement& m, const NavState& x_k, const NavState& x_prev) {
  OdomResidual out;
  const Rotation z_hat = predict_relative_rotation(x_k, x_prev);
  out.r_rot = log_so3(z_hat.inverse() * m.z_rot);
  out.r_pos = m.z_pos - predict_relative_translation(x_k, x_prev);

  const Mat3 r_k = x_k.rot_GI.matrix();
  const Mat3 r_prev = x_prev.rot_GI.matrix();
  const Mat3 r_io = x_k.rot_IO.matrix();
  const Vec3& p_io = x_k.pos_IO;
  const Mat3 a = (r_prev * r_io).transpose();  // ^{O_{k-1}} R_G
  const Vec3 p1 = (r_k - r_prev) * p_io + x_k.pos_GI - x_prev.pos_GI;

  using namespace idx;
  out.h_rot.block<3, 3>(0, kRot) = r_io.transpose();
  out.h_rot.block<3, 3>(0, kRotIO) = Mat3::Identity() - r_io.transpose() * r_k.transpose() * r_prev * r_io;

  out.h_pos.block<3, 3>(0, kRot) = -a * r_k * skew(p_io);
  out.h_pos.block<3, 3>(0, kPos) = a;
  out.h_pos.block<3, 3>(0, kRotIO) = skew(a * p1);
  out.h_pos.block<3, 3>(0, kPosIO) = a * (r_k - r_prev);
  return out;
}

}  // namespace gatedlio
