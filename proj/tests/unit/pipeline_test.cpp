#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "gatedlio/pipeline.hpp"

namespace gatedlio {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

TEST(Pipeline, StaticInitializeRecoversGravityAndGyroBias) {
  sim::SimConfig cfg;
  cfg.duration = 1.0;
  cfg.init_bias_gyro_std = 2e-3;
  cfg.imu_noise = NoiseParams{1e-4, 1e-3, 0.0, 0.0};
  const sim::Dataset ds = sim::generate_dataset(cfg);
  const NavState x = static_initialize(ds.imu, 0.9, cfg.rig);
  EXPECT_LT((x.bias_gyro - ds.initial_state.bias_gyro).norm(), 2e-4);
  // Level start: gravity along +z of the world.
  EXPECT_NEAR(x.gravity.norm(), 9.81, 0.05);
  EXPECT_LT((x.rot_GI.inverse() * x.gravity - ds.initial_state.rot_GI.inverse() * ds.initial_state.gravity).norm(), 0.05);
}

TEST(Pipeline, IntegratorRejectsTimesPastStream) {
  std::vector<ImuSample> imu;
  for (int i = 0; i <= 10; ++i) imu.push_back({0.005 * i, Vec3::Zero(), Vec3(0, 0, 9.81)});
  ImuIntegrator integ(imu, NoiseParams{}, NavState{}, CovMatrix::Identity() * 1e-4, 0.0);
  integ.propagate_to(0.04);
  EXPECT_NEAR(integ.time(), 0.04, 1e-15);
  EXPECT_LT(integ.state().pos_GI.norm(), 1e-12);
  EXPECT_THROW(integ.propagate_to(0.2), std::runtime_error);
  EXPECT_THROW(integ.propagate_to(0.01), std::invalid_argument);
}

RunConfig short_room() {
  RunConfig cfg;
  cfg.sim.world = "room";
  cfg.sim.trajectory.speed = 0.0;
  cfg.sim.trajectory.yaw_rate = 0.3;
  cfg.sim.trajectory.start = Vec3(0, 0, 1);
  cfg.sim.duration = 3.0;
  cfg.sim.sigma_l = 0.01;
  cfg.filter.iekf.lidar.sigma = 0.01;
  cfg.filter.init = InitMode::kGroundTruth;
  return cfg;
}

TEST(Pipeline, RoomRunHoldsInvariants) {
  const RunConfig cfg = short_room();
  const SensorData data = to_sensor_data(sim::generate_dataset(cfg.sim));
  std::size_t seen = 0;
  const RunResult r = run_filter(data, cfg, [&](const UpdateContext& c) {
    ++seen;
    EXPECT_GT(c.result.n_points, 1000u);
  });
  EXPECT_EQ(r.diagnostics.size(), 30u);
  EXPECT_EQ(seen, 29u);  // first scan only seeds the map
  EXPECT_TRUE(r.cov_ok);
  EXPECT_TRUE(r.cost_monotone);
  EXPECT_TRUE(r.gating_ok);
  for (const auto& d : r.diagnostics) EXPECT_FALSE(d.degenerate);
  EXPECT_LT(eval::evaluate(r.trajectory, data.ground_truth).mean, 0.02);
}

TEST(Pipeline, OutputsAreDeterministic) {
  RunConfig cfg = short_room();
  cfg.sim.duration = 1.5;
  const SensorData data = to_sensor_data(sim::generate_dataset(cfg.sim));
  const fs::path base = fs::temp_directory_path() / ("gatedlio_pipe_" + std::to_string(::getpid()));
  fs::remove_all(base);
  write_run_outputs((base / "a").string(), run_filter(data, cfg), cfg);
  write_run_outputs((base / "b").string(), run_filter(data, cfg), cfg);
  EXPECT_EQ(slurp(base / "a" / "trajectory.tum"), slurp(base / "b" / "trajectory.tum"));
  EXPECT_EQ(slurp(base / "a" / "config.toml"), slurp(base / "b" / "config.toml"));
  const std::string diag = slurp(base / "a" / "diagnostics.csv");
  EXPECT_EQ(diag.rfind("t,iterations,converged,n_points,degenerate,used_odometry,cost", 0), 0u);
  fs::remove_all(base);
}

TEST(Pipeline, TinyCampaignIsReproducible) {
  RunConfig cfg;
  cfg.sim.duration = 2.0;
  cfg.campaign.sigmas = {0.03};
  cfg.campaign.runs = 2;
  const fs::path base = fs::temp_directory_path() / ("gatedlio_camp_" + std::to_string(::getpid()));
  fs::remove_all(base);
  const CampaignResult a = run_campaign(cfg, (base / "a").string());
  const CampaignResult b = run_campaign(cfg, (base / "b").string());
  ASSERT_EQ(a.runs.size(), 4u);
  EXPECT_TRUE(a.all_ok);
  for (const char* f : {"runs.csv", "stats.csv"}) EXPECT_EQ(slurp(base / "a" / f), slurp(base / "b" / f)) << f;
  for (const auto& r : a.runs) EXPECT_TRUE(r.error.empty()) << r.error;
  fs::remove_all(base);
}

TEST(Pipeline, CampaignRunConfigSetsNoiseAndTolerance) {
  const RunConfig base;
  const RunConfig c = campaign_run_config(base, 0.07, 12, FusionMode::kLidarOnly);
  EXPECT_EQ(c.sim.seed, 12u);
  EXPECT_EQ(c.sim.sigma_l, 0.07);
  EXPECT_EQ(c.filter.iekf.lidar.sigma, 0.07);
  EXPECT_NEAR(c.filter.iekf.lidar.plane_tol, 0.21, 1e-12);
  EXPECT_EQ(c.filter.iekf.mode, FusionMode::kLidarOnly);
  EXPECT_EQ(campaign_run_config(base, 0.03, 1, FusionMode::kLidarOnly).filter.iekf.lidar.plane_tol, 0.1);
}

}  // namespace
}  // namespace gatedlio
