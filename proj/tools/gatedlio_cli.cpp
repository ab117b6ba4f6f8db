// Command-line front end: simulate, run, campaign, crlb-cert, eval.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gatedlio/config.hpp"
#include "gatedlio/dataset_io.hpp"
#include "gatedlio/evaluation.hpp"
#include "gatedlio/pipeline.hpp"
#include "gatedlio/simulator.hpp"

namespace fs = std::filesystem;
using namespace gatedlio;

namespace {

int cmd_simulate(const std::string& cfg_path, const std::string& out) {
  const RunConfig cfg = load_config(cfg_path);
  const sim::Dataset ds = sim::generate_dataset(cfg.sim);
  write_dataset(out, ds, cfg);
  std::size_t pts = 0;
  for (const auto& s : ds.scans) pts += s.points.size();
  std::printf("wrote %s: %zu IMU, %zu odometry, %zu scans (%zu points)\n", out.c_str(), ds.imu.size(),
              ds.odom.size(), ds.scans.size(), pts);
  return 0;
}

int cmd_run(const std::string& dataset, const std::string& cfg_path, const std::string& out) {
  const RunConfig cfg = load_config(cfg_path);
  const SensorData data = read_dataset(dataset);
  const RunResult r = run_filter(data, cfg);
  write_run_outputs(out, r, cfg);
  std::size_t degenerate = 0, fused = 0;
  std::vector<double> ms;
  for (const auto& d : r.diagnostics) {
    degenerate += d.degenerate;
    fused += d.used_odometry;
    ms.push_back(d.wall_ms);
  }
  std::printf("scans: %zu, degenerate: %zu, odometry fused: %zu\n", r.diagnostics.size(), degenerate, fused);
  if (!ms.empty()) {
    std::printf("per-scan time: median %.2f ms, p90 %.2f ms\n", eval::quantile(ms, 0.5), eval::quantile(ms, 0.9));
  }
  if (!data.ground_truth.empty()) {
    const eval::AteStats a = eval::evaluate(r.trajectory, data.ground_truth);
    std::printf("ATE: max %.4f m, mean %.4f m, rmse %.4f m\n", a.max, a.mean, a.rmse);
  }
  const bool ok = r.cov_ok && r.cost_monotone && r.gating_ok;
  std::printf("checks: covariance %s, cost %s, gating %s\n", r.cov_ok ? "ok" : "FAIL",
              r.cost_monotone ? "ok" : "FAIL", r.gating_ok ? "ok" : "FAIL");
  return ok ? 0 : 1;
}

int cmd_campaign(const std::string& spec_path, const std::string& out) {
  const RunConfig cfg = load_config(spec_path);
  const CampaignResult r = run_campaign(cfg, out);
  std::cout << campaign_summary(r);
  return r.all_ok ? 0 : 1;
}

int cmd_crlb(std::size_t n, std::uint64_t seed, const std::string& out, const std::string& source) {
  std::vector<CrlbInstanceReport> all;
  if (source == "synthetic" || source == "both") {
    const auto r = run_crlb_cert(n, seed, CrlbSource::kSynthetic);
    all.insert(all.end(), r.begin(), r.end());
  }
  if (source == "harvested" || source == "both") {
    const auto r = run_crlb_cert(n, seed, CrlbSource::kHarvested);
    all.insert(all.end(), r.begin(), r.end());
  }
  fs::create_directories(out);
  write_crlb_report((fs::path(out) / "crlb_report.csv").string(), all);
  std::size_t passed = 0;
  for (const auto& r : all) {
    if (r.passed) {
      ++passed;
    } else {
      std::printf("FAILED %s instance %zu (seed %llu): gap %.3e, oracle %.2e/%.2e %s\n",
                  std::string(to_string(r.source)).c_str(), r.instance, static_cast<unsigned long long>(r.seed),
                  r.eigmin_gap, r.oracle_err_li, r.oracle_err_pf, r.error.c_str());
    }
  }
  std::printf("%zu/%zu instances certified\n", passed, all.size());
  return passed == all.size() ? 0 : 1;
}

int cmd_eval(const std::string& est, const std::string& gt, double max_dt) {
  const eval::AteStats a = eval::evaluate(eval::read_tum_file(est), eval::read_tum_file(gt), max_dt);
  std::printf("pairs %zu\nmax   %.6f m\nmean  %.6f m\nrmse  %.6f m\n", a.errors.size(), a.max, a.mean, a.rmse);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gatedlio: degeneration-gated LiDAR-inertial odometry"};
  app.require_subcommand(1);

  std::string cfg, out, dataset, est, gt, source = "both";
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double max_dt = 0.010;

  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  sim->add_option("config", cfg, "TOML config")->required()->check(CLI::ExistingFile);
  sim->add_option("out", out, "output dataset directory")->required();

  auto* run = app.add_subcommand("run", "run the filter on a dataset");
  run->add_option("dataset", dataset, "dataset directory")->required()->check(CLI::ExistingDirectory);
  run->add_option("config", cfg, "TOML config")->required()->check(CLI::ExistingFile);
  run->add_option("out", out, "output directory")->required();

  auto* camp = app.add_subcommand("campaign", "Monte Carlo comparison of fusion modes");
  camp->add_option("spec", cfg, "TOML config with a [campaign] section")->required()->check(CLI::ExistingFile);
  camp->add_option("out", out, "output directory")->required();

  auto* crlb = app.add_subcommand("crlb-cert", "certify the CRLB ordering on random and simulated instances");
  crlb->add_option("n", n, "instances per source")->required();
  crlb->add_option("seed", seed, "base seed")->required();
  crlb->add_option("out", out, "output directory")->required();
  crlb->add_option("--source", source, "synthetic, harvested or both")
      ->check(CLI::IsMember({"synthetic", "harvested", "both"}));

  auto* ev = app.add_subcommand("eval", "absolute trajectory error of a TUM trajectory");
  ev->add_option("est", est, "estimated trajectory (TUM)")->required()->check(CLI::ExistingFile);
  ev->add_option("gt", gt, "ground truth (TUM)")->required()->check(CLI::ExistingFile);
  ev->add_option("--max-dt", max_dt, "association tolerance, s");

  auto* dump = app.add_subcommand("print-config", "print the effective configuration (defaults if no file)");
  dump->add_option("config", cfg, "TOML config")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) return cmd_simulate(cfg, out);
    if (*run) return cmd_run(dataset, cfg, out);
    if (*camp) return cmd_campaign(cfg, out);
    if (*crlb) return cmd_crlb(n, seed, out, source);
    if (*ev) return cmd_eval(est, gt, max_dt);
    if (*dump) {
      std::cout << to_toml(cfg.empty() ? RunConfig{} : load_config(cfg));
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
