#include <random>

#include <gtest/gtest.h>

#include "gatedlio/odometry_measurement.hpp"
#include "gatedlio/simulator.hpp"
#include "test_util.hpp"

namespace gatedlio {
namespace {

using testing::random_state;

TEST(OdometryMeasurement, RotationJacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(51);
  for (int i = 0; i < 25; ++i) {
    const NavState x_k = random_state(rng), x_prev = random_state(rng);
    const Rotation z0 = predict_relative_rotation(x_k, x_prev);
    const Eigen::MatrixXd fd = testing::numeric_jacobian(
        [&](const ErrorState& d) -> Eigen::VectorXd {
          return log_so3(z0.inverse() * predict_relative_rotation(boxplus(x_k, d), x_prev));
        },
        3);
    const OdomResidual r = residual_and_jacobian(RelPoseMeasurement{}, x_k, x_prev);
    EXPECT_LT((fd - r.h_rot).cwiseAbs().maxCoeff(), 1e-6) << "config " << i;
  }
}

TEST(OdometryMeasurement, TranslationJacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(52);
  for (int i = 0; i < 25; ++i) {
    const NavState x_k = random_state(rng), x_prev = random_state(rng);
    const Eigen::MatrixXd fd = testing::numeric_jacobian(
        [&](const ErrorState& d) -> Eigen::VectorXd { return predict_relative_translation(boxplus(x_k, d), x_prev); },
        3);
    const OdomResidual r = residual_and_jacobian(RelPoseMeasurement{}, x_k, x_prev);
    EXPECT_LT((fd - r.h_pos).cwiseAbs().maxCoeff(), 1e-6) << "config " << i;
  }
}

TEST(OdometryMeasurement, ResidualZeroAtTruth) {
  std::mt19937_64 rng(53);
  const NavState x_prev = random_state(rng);
  NavState x_k = x_prev;
  x_k.rot_GI = x_prev.rot_GI * exp_so3(Vec3(0.01, -0.02, 0.1));
  x_k.pos_GI = x_prev.pos_GI + Vec3(0.1, 0.02, 0.0);
  // Odometry frame poses ^M T_O with an arbitrary origin M.
  const Rotation r_mg = exp_so3(Vec3(0.3, -0.1, 0.5));
  const Vec3 p_mg(1, 2, 3);
  auto odom_pose = [&](const NavState& x, double t) {
    return OdomPose{t, r_mg * x.rot_GI * x.rot_IO, r_mg * (x.rot_GI * x.pos_IO + x.pos_GI) + p_mg};
  };
  const RelPoseMeasurement m = relative_measurement(odom_pose(x_prev, 0.0), odom_pose(x_k, 0.1));
  const OdomResidual r = residual_and_jacobian(m, x_k, x_prev);
  EXPECT_LT(r.r_rot.norm(), 1e-12);
  EXPECT_LT(r.r_pos.norm(), 1e-12);
}

TEST(OdometryMeasurement, NoiseScalesWithDistance) {
  OdomNoiseParams noise;
  const OdomPose a{0.0, Rotation(), Vec3::Zero()};
  const OdomPose near{0.1, Rotation(), Vec3(0.01, 0, 0)};
  const OdomPose far{0.1, Rotation(), Vec3(1.0, 0, 0)};
  EXPECT_NEAR(relative_measurement(a, near, noise).cov_pos(0, 0), 1e-6, 1e-18);
  EXPECT_NEAR(relative_measurement(a, far, noise).cov_pos(0, 0), 4e-4, 1e-15);
  EXPECT_NEAR(relative_measurement(a, far, noise).cov_rot(2, 2), 2.5e-3 * 2.5e-3, 1e-18);
}

TEST(OdometryMeasurement, InterpolationAndExtrapolation) {
  std::vector<OdomPose> buf{{0.0, Rotation(), Vec3::Zero()}, {1.0, exp_so3(Vec3(0, 0, 1)), Vec3(2, 0, 0)}};
  const OdomPose mid = interpolate_pose(buf, 0.25);
  EXPECT_TRUE(mid.pos.isApprox(Vec3(0.5, 0, 0)));
  EXPECT_LT((log_so3(mid.rot) - Vec3(0, 0, 0.25)).norm(), 1e-12);
  const OdomPose ex = interpolate_pose(buf, 1.01);
  EXPECT_TRUE(ex.pos.isApprox(Vec3(2.02, 0, 0)));
  EXPECT_THROW(interpolate_pose(buf, 1.1), std::out_of_range);
  EXPECT_THROW(interpolate_pose(buf, -0.05), std::out_of_range);
}

TEST(OdometryMeasurement, SimulatedNoiseStatistics) {
  // Per-step rotation noise 1e-3 rad: relative yaw error over one step has
  // that standard deviation.
  sim::SimConfig cfg;
  cfg.odom.noise_r = 1e-3;
  cfg.odom.noise_p = 0.0;
  const auto odom = sim::synth_odometry(cfg.trajectory, cfg.rig, 0.0, 20.0, 50.0, cfg.odom, 7);
  double s2 = 0.0;
  int n = 0;
  for (std::size_t i = 1; i < odom.size(); ++i) {
    const auto ka = sim::sample_trajectory(cfg.trajectory, odom[i - 1].t);
    const auto kb = sim::sample_trajectory(cfg.trajectory, odom[i].t);
    const Rotation truth = (ka.rot * cfg.rig.rot_IO).inverse() * (kb.rot * cfg.rig.rot_IO);
    const Vec3 e = log_so3(truth.inverse() * odom[i - 1].rot.inverse() * odom[i].rot);
    s2 += e.squaredNorm();
    n += 3;
  }
  EXPECT_NEAR(std::sqrt(s2 / n), 1e-3, 5e-5);
}

}  // namespace
}  // namespace gatedlio
