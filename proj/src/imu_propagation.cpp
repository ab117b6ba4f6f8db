#include "gatedlio/imu_propagation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gatedlio {

NavState propagate_state(const NavState& x, const ImuSample& u, double dt) {
  if (!(dt > 0.0) || dt > 0.1) {
    throw std::invalid_argument("propagate_state: dt must be in (0, 0.1], got " + std::to_string(dt));
  }
  NavState out = x;
  const Vec3 acc_world = x.rot_GI * (u.acc - x.bias_acc) - x.gravity;
  out.rot_GI = x.rot_GI * exp_so3((u.gyro - x.bias_gyro) * dt);
  out.pos_GI = x.pos_GI + x.vel_GI * dt + 0.5 * acc_world * dt * dt;
  out.vel_GI = x.vel_GI + acc_world * dt;
  return out;
}

TransitionPair transition_matrices(const NavState& x, const ImuSample& u, double dt) {
  TransitionPair tp;
  if (dt == 0.0) return tp;

  const Vec3 omega_dt = (u.gyro - x.bias_gyro) * dt;
  const Mat3 r = x.rot_GI.matrix();
  const Mat3 jr = right_jacobian(omega_dt);
  const Vec3 acc_body = u.acc - x.bias_acc;
  const Mat3 da_dtheta = -r * skew(acc_body);
  const double half_dt2 = 0.5 * dt * dt;
  auto& phi = tp.phi;

  using namespace idx;
  phi.block<3, 3>(kRot, kRot) = exp_so3(omega_dt).matrix().transpose();
  phi.block<3, 3>(kRot, kBiasGyro) = -jr * dt;

  phi.block<3, 3>(kVel, kRot) = da_dtheta * dt;
  phi.block<3, 3>(kVel, kBiasAcc) = -r * dt;
  phi.block<3, 3>(kVel, kGravity) = -Mat3::Identity() * dt;

  phi.block<3, 3>(kPos, kVel) = Mat3::Identity() * dt;
  phi.block<3, 3>(kPos, kRot) = da_dtheta * half_dt2;
  phi.block<3, 3>(kPos, kBiasAcc) = -r * half_dt2;
  phi.block<3, 3>(kPos, kGravity) = -Mat3::Identity() * half_dt2;

  // Noise columns: n_g(0), n_wg(3), n_a(6), n_wa(9).
  tp.g.block<3, 3>(kRot, 0) = -jr;
  tp.g.block<3, 3>(kBiasGyro, 3) = Mat3::Identity();
  tp.g.block<3, 3>(kVel, 6) = -r;
  tp.g.block<3, 3>(kPos, 6) = -0.5 * dt * r;
  tp.g.block<3, 3>(kBiasAcc, 9) = Mat3::Identity();
  return tp;
}

CovMatrix propagate_covariance(const CovMatrix& p, const TransitionPair& tp,
                               const NoiseParams& q, double dt) {
  Eigen::Matrix<double, kNoiseDim, 1> qd;
  qd << Vec3::Constant(q.sigma_g * q.sigma_g), Vec3::Constant(q.sigma_wg * q.sigma_wg),
      Vec3::Constant(q.sigma_a * q.sigma_a), Vec3::Constant(q.sigma_wa * q.sigma_wa);
  qd *= dt;
  CovMatrix out = tp.phi * p * tp.phi.transpose() + tp.g * qd.asDiagonal() * tp.g.transpose();
  return symmetrized(out);
}

ImuSample interval_input(const ImuSample& a, const ImuSample& b) {
  ImuSample u;
  u.t = a.t;
  u.gyro = 0.5 * (a.gyro + b.gyro);
  u.acc = 0.5 * (a.acc + b.acc);
  return u;
}

}  // namespace gatedlio
