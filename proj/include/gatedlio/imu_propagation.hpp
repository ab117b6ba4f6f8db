#pragma once

#include <Eigen/Core>

#include "gatedlio/state.hpp"

namespace gatedlio {

struct ImuSample {
  double t = 0.0;               // s
  Vec3 gyro = Vec3::Zero();     // rad/s
  Vec3 acc = Vec3::Zero();      // m/s^2
};

/// Continuous-time noise densities.
struct NoiseParams {
  double sigma_g = 1e-3;   // gyro white noise, rad/s/sqrt(Hz)
  double sigma_a = 1e-2;   // accel white noise, m/s^2/sqrt(Hz)
  double sigma_wg = 1e-5;  // gyro bias random walk, rad/s^2/sqrt(Hz)
  double sigma_wa = 1e-4;  // accel bias random walk, m/s^3/sqrt(Hz)
};

inline constexpr int kNoiseDim = 12;  // [n_g, n_wg, n_a, n_wa]

struct TransitionPair {
  CovMatrix phi = CovMatrix::Identity();
  Eigen::Matrix<double, kStateDim, kNoiseDim> g =
      Eigen::Matrix<double, kStateDim, kNoiseDim>::Zero();
};

/// One strapdown step with input held constant over dt:
///   R <- R exp((w_m - b_g) dt)
///   a  = R (a_m - b_a) - g
///   p <- p + v dt + a dt^2 / 2,  v <- v + a dt
/// Throws std::invalid_argument unless 0 < dt <= 0.1.
NavState propagate_state(const NavState& x, const ImuSample& u, double dt);

/// Jacobian of boxminus(propagate_state(x [+] d), propagate_state(x)) at
/// d = 0, plus the noise-input matrix. Extrinsic blocks are identity and
/// receive no noise. dt = 0 gives identity.
TransitionPair transition_matrices(const NavState& x, const ImuSample& u, double dt);

/// P' = Phi P Phi^T + G Q G^T with Q = diag(sigma^2) * dt, re-symmetrized.
CovMatrix propagate_covariance(const CovMatrix& p, const TransitionPair& tp,
                               const NoiseParams& q, double dt);

/// Input used for the interval [a.t, b.t]: mean of both readings, stamped a.t.
ImuSample interval_input(const ImuSample& a, const ImuSample& b);

}  // namespace gatedlio
