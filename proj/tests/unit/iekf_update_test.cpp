#include <random>

#include <Eigen/Dense>

#include <gtest/gtest.h>

#include "gatedlio/config.hpp"
#include "gatedlio/iekf_update.hpp"
#include "gatedlio/simulator.hpp"
#include "test_util.hpp"

namespace gatedlio {
namespace {

struct Scene {
  sim::SimConfig cfg;
  PointMap map;
  LidarScan scan;
  NavState truth;
};

NavState truth_at(const sim::SimConfig& cfg, double t) {
  const sim::KinematicState k = sim::sample_trajectory(cfg.trajectory, t);
  NavState x;
  x.rot_GI = k.rot;
  x.pos_GI = k.pos;
  x.vel_GI = k.vel;
  x.rot_IL = cfg.rig.rot_IL;
  x.pos_IL = cfg.rig.pos_IL;
  x.rot_IO = cfg.rig.rot_IO;
  x.pos_IO = cfg.rig.pos_IO;
  return x;
}

// Map built from noiseless scans at the true poses of t_map, scan at t.
Scene make_scene(const std::string& world, double t, std::vector<double> t_map) {
  Scene s{sim::SimConfig{}, PointMap(MapParams{}), LidarScan{}, NavState{}};
  s.cfg.world = world;
  if (world == "room") {
    s.cfg.trajectory.start = Vec3(0, 0, 1);
    s.cfg.trajectory.speed = 0.0;
    s.cfg.trajectory.yaw_rate = 0.3;
  }
  const sim::World w = sim::build_world(s.cfg);
  for (double tm : t_map) {
    const LidarScan m = sim::raycast_scan(w, s.cfg.trajectory, tm, s.cfg.rig, 0.0, 5, false);
    std::vector<Vec3> pts;
    for (const auto& p : m.points) pts.push_back(lidar_to_world(truth_at(s.cfg, tm), p.p));
    s.map.insert_scan(pts);
  }
  s.scan = sim::raycast_scan(w, s.cfg.trajectory, t, s.cfg.rig, 0.0, 6, false);
  s.truth = truth_at(s.cfg, t);
  return s;
}

IekfParams tight_params() {
  IekfParams p;
  p.max_iter = 10;
  p.lidar.sigma = 0.03;
  p.lidar.plane_tol = 0.01;
  p.lidar.corr_gate = 0.3;
  return p;
}

CovMatrix prior_cov() {
  CovMatrix p = CovMatrix::Identity() * 1e-4;
  p.block<3, 3>(idx::kRot, idx::kRot) *= 10.0;
  p.block<3, 3>(idx::kPos, idx::kPos) *= 100.0;
  return p;
}

TEST(Iekf, RoomUpdateRecoversPose) {
  std::vector<double> t_map;
  for (int i = 1; i < 20; ++i) t_map.push_back(0.1 * i);
  const Scene s = make_scene("room", 2.0, t_map);
  ErrorState err = ErrorState::Zero();
  err.segment<3>(idx::kRot) = Vec3(0.01, -0.01, 0.02);
  err.segment<3>(idx::kPos) = Vec3(0.08, -0.05, 0.04);
  const NavState x_pred = boxplus(s.truth, err);
  const CovMatrix p = prior_cov();
  const UpdateResult r = iterated_update(x_pred, p, s.scan, s.map, std::nullopt, tight_params());
  EXPECT_FALSE(r.report.degenerate);
  EXPECT_FALSE(r.used_odometry);
  const ErrorState e = boxminus(r.state, s.truth);
  // Corner neighbour sets leave a few biased rows even in a noiseless map.
  EXPECT_LT(e.segment<3>(idx::kPos).norm(), 1e-2);
  EXPECT_LT(e.segment<3>(idx::kRot).norm(), 2e-3);
  EXPECT_TRUE(is_valid_covariance(r.cov));
  for (const auto& tr : r.trace) EXPECT_LE(tr.cost_after, tr.cost_before * (1 + 1e-12));
  // Posterior never exceeds the prior along any direction.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p - r.cov);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
}

TEST(Iekf, CorridorLidarOnlyCannotFixAxisButOdometryCan) {
  const Scene s = make_scene("corridor", 12.0, {11.8, 11.9});
  NavState x_prev = truth_at(s.cfg, 11.9);
  ErrorState err = ErrorState::Zero();
  err.segment<3>(idx::kPos) = Vec3(0.3, 0.05, 0.0);
  const NavState x_pred = boxplus(s.truth, err);
  const CovMatrix p = prior_cov();

  IekfParams lo = tight_params();
  lo.mode = FusionMode::kLidarOnly;
  const UpdateResult r_lo = iterated_update(x_pred, p, s.scan, s.map, std::nullopt, lo);
  EXPECT_TRUE(r_lo.report.trans_degenerate);
  EXPECT_NEAR(std::abs(r_lo.report.dir_trans.col(0).x()), 1.0, 0.05);
  const ErrorState e_lo = boxminus(r_lo.state, s.truth);
  EXPECT_GT(e_lo[idx::kPos], 0.2);
  EXPECT_LT(std::abs(e_lo[idx::kPos + 1]), 5e-3);

  // Exact relative odometry from the previous (true) state.
  auto odom_pose = [&](const NavState& x, double t) {
    return OdomPose{t, x.rot_GI * x.rot_IO, x.rot_GI * x.pos_IO + x.pos_GI};
  };
  OdometryInput odom{relative_measurement(odom_pose(x_prev, 11.9), odom_pose(s.truth, 12.0)), x_prev};
  IekfParams gated = tight_params();
  const UpdateResult r_g = iterated_update(x_pred, p, s.scan, s.map, odom, gated);
  EXPECT_TRUE(r_g.report.degenerate);
  EXPECT_TRUE(r_g.used_odometry);
  EXPECT_LT(boxminus(r_g.state, s.truth).segment<3>(idx::kPos).norm(), 0.01);
  EXPECT_TRUE(is_valid_covariance(r_g.cov));
}

TEST(Iekf, GatingRules) {
  std::vector<LidarResidualRow> rows(3);
  std::vector<double> var(3, 1e-3);
  OdomResidual od;
  RelPoseMeasurement meas;
  DegeneracyReport deg, ok;
  deg.degenerate = true;
  EXPECT_FALSE(build_stack(rows, var, od, meas, deg, FusionMode::kLidarOnly).used_odometry);
  EXPECT_TRUE(build_stack(rows, var, od, meas, deg, FusionMode::kDegenerationGated).used_odometry);
  EXPECT_FALSE(build_stack(rows, var, od, meas, ok, FusionMode::kDegenerationGated).used_odometry);
  EXPECT_TRUE(build_stack(rows, var, od, meas, ok, FusionMode::kAlwaysFused).used_odometry);
  EXPECT_FALSE(build_stack(rows, var, std::nullopt, std::nullopt, deg, FusionMode::kAlwaysFused).used_odometry);
  EXPECT_EQ(build_stack(rows, var, od, meas, deg, FusionMode::kDegenerationGated).rows(), 9u);
}

TEST(Iekf, StackInformationMatchesDense) {
  std::mt19937_64 rng(81);
  std::vector<LidarResidualRow> rows(20);
  std::vector<double> var;
  for (auto& r : rows) {
    r.jacobian.setZero();
    r.jacobian.segment<6>(idx::kRot) = Eigen::Matrix<double, 1, 6>::Random();
    r.jacobian.segment<6>(idx::kRotIL) = Eigen::Matrix<double, 1, 6>::Random();
    r.residual = testing::rand_vec(rng, 1.0).x();
    var.push_back(0.5 + 0.1 * var.size());
  }
  OdomResidual od;
  od.h_rot = OdomJacobian::Random();
  od.h_pos = OdomJacobian::Random();
  od.r_rot = testing::rand_vec(rng, 0.1);
  od.r_pos = testing::rand_vec(rng, 0.1);
  RelPoseMeasurement meas;
  meas.cov_rot = Mat3::Identity() * 0.01;
  meas.cov_pos = Mat3::Identity() * 0.04;
  DegeneracyReport deg;
  deg.degenerate = true;
  const MeasurementStack s = build_stack(rows, var, od, meas, deg, FusionMode::kDegenerationGated);
  Eigen::VectorXd rdiag(s.rows());
  for (std::size_t i = 0; i < 20; ++i) rdiag[static_cast<Eigen::Index>(i)] = var[i];
  rdiag.segment<3>(20).setConstant(0.01);
  rdiag.segment<3>(23).setConstant(0.04);
  const Eigen::MatrixXd rinv = rdiag.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd dense = s.jacobian.transpose() * rinv * s.jacobian;
  EXPECT_LT((s.information() - dense).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((s.information_vector() - s.jacobian.transpose() * rinv * s.residual).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(s.weighted_sq_norm(), s.residual.dot(rinv * s.residual), 1e-10);
}

TEST(Iekf, EmptyMapReturnsPrediction) {
  LidarScan scan;
  scan.points.push_back({0.0, Vec3(1, 0, 0)});
  const NavState x;
  const UpdateResult r = iterated_update(x, CovMatrix::Identity(), scan, PointMap{}, std::nullopt, IekfParams{});
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(boxminus(r.state, x).norm(), 0.0);
}

}  // namespace
}  // namespace gatedlio
