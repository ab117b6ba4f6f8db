#include <random>

#include <gtest/gtest.h>

#include "gatedlio/lidar_measurement.hpp"
#include "gatedlio/simulator.hpp"
#include "test_util.hpp"

namespace gatedlio {
namespace {

using testing::rand_vec;
using testing::random_state;

PlaneCorrespondence random_correspondence(std::mt19937_64& rng) {
  PlaneCorrespondence c;
  c.point_L = rand_vec(rng, 5.0);
  c.plane.normal = rand_vec(rng, 1.0).normalized();
  c.plane.anchor = rand_vec(rng, 5.0);
  c.plane.valid = true;
  c.noise_var = 1e-3;
  return c;
}

TEST(LidarMeasurement, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 25; ++i) {
    const NavState x = random_state(rng);
    const PlaneCorrespondence c = random_correspondence(rng);
    const Eigen::MatrixXd fd = testing::numeric_jacobian(
        [&](const ErrorState& d) -> Eigen::VectorXd {
          return Eigen::VectorXd::Constant(1, predict_plane_distance(c, boxplus(x, d)));
        },
        1);
    const LidarResidualRow row = residual_and_jacobian(c, x);
    EXPECT_LT((fd - row.jacobian).cwiseAbs().maxCoeff(), 1e-6) << "config " << i;
    EXPECT_NEAR(row.residual, -predict_plane_distance(c, x), 1e-12);
  }
}

TEST(LidarMeasurement, DistanceExample) {
  NavState x;
  x.pos_GI = Vec3(0, 0, 2);
  PlaneCorrespondence c;
  c.plane.normal = Vec3::UnitZ();
  c.plane.anchor = Vec3::Zero();
  c.point_L = Vec3(0, 0, -2);
  EXPECT_NEAR(predict_plane_distance(c, x), 0.0, 1e-15);
  c.point_L = Vec3(3, 1, -1.5);
  EXPECT_NEAR(predict_plane_distance(c, x), 0.5, 1e-15);
}

PointMap floor_map() {
  PointMap map(MapParams{0.1, 4096});
  std::vector<Vec3> pts;
  for (int i = -20; i <= 20; ++i)
    for (int j = -20; j <= 20; ++j) pts.push_back(Vec3(0.1 * i + 0.05, 0.1 * j + 0.05, 0.0));
  map.insert_scan(pts);
  return map;
}

TEST(LidarMeasurement, MatchPointOnFloor) {
  const PointMap map = floor_map();
  NavState x;
  x.pos_GI = Vec3(0, 0, 1);
  LidarParams params;
  const auto m = match_point(Vec3(0.3, 0.2, -0.98), map, x, params);
  ASSERT_TRUE(m.has_value());
  EXPECT_NEAR(std::abs(m->plane.normal.z()), 1.0, 1e-9);
  EXPECT_NEAR(std::abs(predict_plane_distance(*m, x)), 0.02, 1e-9);
  EXPECT_DOUBLE_EQ(m->noise_var, params.sigma * params.sigma);
  params.corr_gate = 0.01;
  EXPECT_FALSE(match_point(Vec3(0.3, 0.2, -0.98), map, x, params).has_value());
  params.corr_gate = 1.0;
  EXPECT_FALSE(match_point(Vec3(30.0, 0.0, -1.0), map, x, params).has_value());  // neighbours too far
}

TEST(LidarMeasurement, ParallelMatchesSerial) {
  const PointMap map = floor_map();
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  LidarScan scan;
  for (int i = 0; i < 2000; ++i) scan.points.push_back({0.0, Vec3(u(rng), u(rng), -1.0 + 0.05 * u(rng))});
  NavState x;
  x.pos_GI = Vec3(0, 0, 1);
  const auto a = find_correspondences(scan, map, x, LidarParams{});
  const auto b = find_correspondences_serial(scan, map, x, LidarParams{});
  ASSERT_EQ(a.size(), b.size());
  ASSERT_GT(a.size(), 1000u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].point_L, b[i].point_L);
    EXPECT_EQ(a[i].plane.normal, b[i].plane.normal);
  }
}

double corridor_distance(const Vec3& p) {
  return std::min({std::abs(p.y() - 2.0), std::abs(p.y() + 2.0), std::abs(p.z()), std::abs(p.z() - 3.0)});
}

TEST(LidarMeasurement, UndistortPutsPointsBackOnSurfaces) {
  sim::SimConfig cfg;
  cfg.sigma_l = 0.0;
  cfg.imu_noise = NoiseParams{0, 0, 0, 0};
  cfg.init_bias_acc_std = 0.0;
  cfg.init_bias_gyro_std = 0.0;
  const sim::World world = sim::build_world(cfg);
  const double t_end = 6.0;
  const LidarScan raw = sim::raycast_scan(world, cfg.trajectory, t_end, cfg.rig, 0.0, 1, true);
  const sim::ImuStream imu = sim::synth_imu_stream(cfg.trajectory, 5.0, 6.5, Vec3::Zero(), Vec3::Zero(), cfg.gravity,
                                                   cfg.imu_noise, cfg.rig.imu_rate, 1);
  const sim::KinematicState k = sim::sample_trajectory(cfg.trajectory, t_end);
  NavState x;
  x.rot_GI = k.rot;
  x.pos_GI = k.pos;
  x.vel_GI = k.vel;
  x.rot_IL = cfg.rig.rot_IL;
  x.pos_IL = cfg.rig.pos_IL;
  const LidarScan fixed = undistort(raw, imu.samples, x);
  ASSERT_EQ(fixed.points.size(), raw.points.size());
  double worst_raw = 0.0, worst_fixed = 0.0;
  for (std::size_t i = 0; i < raw.points.size(); ++i) {
    worst_raw = std::max(worst_raw, corridor_distance(lidar_to_world(x, raw.points[i].p)));
    worst_fixed = std::max(worst_fixed, corridor_distance(lidar_to_world(x, fixed.points[i].p)));
  }
  EXPECT_GT(worst_raw, 5e-3);
  EXPECT_LT(worst_fixed, 1e-3);
}

TEST(LidarMeasurement, UndistortLeavesZeroOffsetsAlone) {
  std::mt19937_64 rng(43);
  LidarScan scan;
  scan.t_end = 1.0;
  for (int i = 0; i < 10; ++i) scan.points.push_back({0.0, rand_vec(rng, 3.0)});
  std::vector<ImuSample> imu;
  for (int i = 0; i <= 40; ++i) imu.push_back({0.8 + 0.005 * i, Vec3(0.1, 0.2, 0.3), Vec3(1, 0, 9.81)});
  const NavState x = random_state(rng);
  const LidarScan out = undistort(scan, imu, x);
  for (std::size_t i = 0; i < scan.points.size(); ++i) EXPECT_LT((out.points[i].p - scan.points[i].p).norm(), 1e-9);
  std::vector<ImuSample> short_imu(imu.begin() + 30, imu.end());
  scan.points[0].offset_time = -0.09;
  EXPECT_THROW(undistort(scan, short_imu, x), std::runtime_error);
}

}  // namespace
}  // namespace gatedlio
