#include <benchmark/benchmark.h>

#include "gatedlio/lidar_measurement.hpp"
#include "gatedlio/simulator.hpp"

namespace {

using namespace gatedlio;

struct Fixture {
  PointMap map;
  LidarScan scan;
  NavState x;
};

// Corridor map from a few true-pose scans, one query scan at 3 cm noise.
const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture out;
    sim::SimConfig cfg;
    const sim::World w = sim::build_world(cfg);
    auto pose = [&](double t) {
      const sim::KinematicState k = sim::sample_trajectory(cfg.trajectory, t);
      NavState x;
      x.rot_GI = k.rot;
      x.pos_GI = k.pos;
      x.rot_IL = cfg.rig.rot_IL;
      x.pos_IL = cfg.rig.pos_IL;
      return x;
    };
    for (double t : {9.6, 9.7, 9.8, 9.9}) {
      const LidarScan s = sim::raycast_scan(w, cfg.trajectory, t, cfg.rig, 0.03, 1, false);
      std::vector<Vec3> pts;
      for (const auto& p : s.points) pts.push_back(lidar_to_world(pose(t), p.p));
      out.map.insert_scan(pts);
    }
    out.scan = sim::raycast_scan(w, cfg.trajectory, 10.0, cfg.rig, 0.03, 2, false);
    out.x = pose(10.0);
    return out;
  }();
  return f;
}

void BM_CorrespondencesParallel(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(find_correspondences(f.scan, f.map, f.x, LidarParams{}));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.scan.points.size()));
}

void BM_CorrespondencesSerial(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(find_correspondences_serial(f.scan, f.map, f.x, LidarParams{}));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.scan.points.size()));
}

BENCHMARK(BM_CorrespondencesParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CorrespondencesSerial)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
