#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "gatedlio/pipeline.hpp"

namespace fs = std::filesystem;

namespace gatedlio {

RunConfig campaign_run_config(const RunConfig& base, double sigma, std::uint64_t seed, FusionMode mode) {
  RunConfig c = base;
  c.sim.seed = seed;
  c.sim.sigma_l = sigma;
  c.filter.iekf.lidar.sigma = sigma;
  c.filter.iekf.lidar.plane_tol = std::max(base.filter.iekf.lidar.plane_tol, 3.0 * sigma);
  c.filter.iekf.mode = mode;
  return c;
}

namespace {

std::string run_name(double sigma, std::uint64_t seed, FusionMode mode) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "sigma_%.3f_seed_%03llu_%s", sigma, static_cast<unsigned long long>(seed),
                std::string(to_string(mode)).c_str());
  return buf;
}

struct Job {
  double sigma;
  std::uint64_t seed;
};

}  // namespace

CampaignResult run_campaign(const RunConfig& base, const std::string& out_dir) {
  const CampaignSpec& spec = base.campaign;
  std::vector<Job> jobs;
  for (double s : spec.sigmas) {
    for (int i = 0; i < spec.runs; ++i) jobs.push_back({s, spec.seed_base + static_cast<std::uint64_t>(i)});
  }
  const std::size_t n_modes = spec.modes.size();
  CampaignResult result;
  result.runs.resize(jobs.size() * n_modes);
  std::vector<RunResult> outputs(out_dir.empty() ? 0 : result.runs.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const Job job = jobs[j];
    std::optional<SensorData> data;
    std::string gen_error;
    try {
      data = to_sensor_data(sim::generate_dataset(campaign_run_config(base, job.sigma, job.seed, spec.modes[0]).sim));
    } catch (const std::exception& e) {
      gen_error = std::string("dataset generation failed: ") + e.what();
    }
    for (std::size_t m = 0; m < n_modes; ++m) {
      RunRecord& rec = result.runs[j * n_modes + m];
      rec.sigma = job.sigma;
      rec.seed = job.seed;
      rec.mode = spec.modes[m];
      if (!data) {
        rec.error = gen_error;
        continue;
      }
      try {
        const RunConfig cfg = campaign_run_config(base, job.sigma, job.seed, rec.mode);
        RunResult run = run_filter(*data, cfg);
        rec.ate = eval::evaluate(run.trajectory, data->ground_truth);
        rec.n_scans = run.diagnostics.size();
        for (const auto& d : run.diagnostics) {
          rec.n_degenerate += d.degenerate;
          rec.n_used_odometry += d.used_odometry;
          rec.n_fallback += d.odometry_fallback;
          rec.scan_ms.push_back(d.wall_ms);
        }
        rec.cov_ok = run.cov_ok;
        rec.cost_monotone = run.cost_monotone;
        rec.gating_ok = run.gating_ok;
        if (!outputs.empty()) outputs[j * n_modes + m] = std::move(run);
      } catch (const std::exception& e) {
        rec.error = e.what();
      }
    }
  }

  for (const RunRecord& r : result.runs) {
    if (!r.error.empty() || !r.cov_ok || !r.gating_ok || !r.cost_monotone) result.all_ok = false;
  }
  for (double s : spec.sigmas) {
    for (FusionMode mode : spec.modes) {
      std::vector<double> means;
      for (const RunRecord& r : result.runs) {
        if (r.sigma == s && r.mode == mode && r.error.empty()) means.push_back(r.ate.mean);
      }
      if (means.empty()) continue;
      result.stats.push_back({s, mode, eval::aggregate(means)});
    }
  }

  if (!out_dir.empty()) {
    fs::create_directories(fs::path(out_dir) / "runs");
    {
      std::ofstream os(fs::path(out_dir) / "config.toml");
      os << to_toml(base);
    }
    for (std::size_t i = 0; i < result.runs.size(); ++i) {
      const RunRecord& r = result.runs[i];
      if (!r.error.empty()) continue;
      write_run_outputs((fs::path(out_dir) / "runs" / run_name(r.sigma, r.seed, r.mode)).string(), outputs[i],
                        campaign_run_config(base, r.sigma, r.seed, r.mode));
    }
    write_campaign_outputs(out_dir, result);
  }
  return result;
}

std::string campaign_summary(const CampaignResult& r) {
  std::ostringstream os;
  char buf[256];
  os << "ATE (m) per run, box-plot statistics of per-run mean ATE\n";
  std::snprintf(buf, sizeof(buf), "%-7s %-20s %4s %9s %9s %9s %9s %9s %9s\n", "sigma", "mode", "n", "mean", "median",
                "q1", "q3", "wlo", "whi");
  os << buf;
  for (const StatRow& s : r.stats) {
    std::snprintf(buf, sizeof(buf), "%-7.3f %-20s %4zu %9.4f %9.4f %9.4f %9.4f %9.4f %9.4f\n", s.sigma,
                  std::string(to_string(s.mode)).c_str(), s.box.n, s.box.mean, s.box.median, s.box.q1, s.box.q3,
                  s.box.whisker_lo, s.box.whisker_hi);
    os << buf;
  }
  // Gap between lidar-only and gated mean ATE, when both are present.
  std::map<double, std::map<FusionMode, double>> means;
  for (const StatRow& s : r.stats) means[s.sigma][s.mode] = s.box.mean;
  bool header = false;
  for (const auto& [sigma, m] : means) {
    const auto g = m.find(FusionMode::kDegenerationGated);
    const auto l = m.find(FusionMode::kLidarOnly);
    if (g == m.end() || l == m.end()) continue;
    if (!header) {
      os << "\nsigma   lidar_only - degeneration_gated (mean ATE, m)\n";
      header = true;
    }
    std::snprintf(buf, sizeof(buf), "%-7.3f %+.4f\n", sigma, l->second - g->second);
    os << buf;
  }
  std::size_t failed = 0;
  for (const RunRecord& rr : r.runs) failed += !rr.error.empty();
  os << "\nruns: " << r.runs.size() << ", failed: " << failed << ", invariants " << (r.all_ok ? "ok" : "VIOLATED")
     << "\n";
  return os.str();
}

void write_campaign_outputs(const std::string& out_dir, const CampaignResult& r) {
  fs::create_directories(out_dir);
  {
    std::FILE* f = std::fopen((fs::path(out_dir) / "runs.csv").string().c_str(), "w");
    if (!f) throw std::runtime_error("cannot write runs.csv");
    std::fprintf(f,
                 "sigma,seed,mode,ate_max,ate_mean,ate_rmse,n_scans,n_degenerate,n_used_odometry,n_fallback,cov_ok,"
                 "cost_monotone,gating_ok,status\n");
    for (const RunRecord& x : r.runs) {
      std::string status = x.error.empty() ? "ok" : x.error;
      std::replace(status.begin(), status.end(), ',', ';');
      std::replace(status.begin(), status.end(), '\n', ' ');
      std::fprintf(f, "%.3f,%llu,%s,%.9f,%.9f,%.9f,%zu,%zu,%zu,%zu,%d,%d,%d,%s\n", x.sigma,
                   static_cast<unsigned long long>(x.seed), std::string(to_string(x.mode)).c_str(), x.ate.max,
                   x.ate.mean, x.ate.rmse, x.n_scans, x.n_degenerate, x.n_used_odometry, x.n_fallback, x.cov_ok,
                   x.cost_monotone, x.gating_ok, status.c_str());
    }
    std::fclose(f);
  }
  {
    std::FILE* f = std::fopen((fs::path(out_dir) / "stats.csv").string().c_str(), "w");
    if (!f) throw std::runtime_error("cannot write stats.csv");
    std::fprintf(f, "sigma,mode,n,mean,median,q1,q3,whisker_lo,whisker_hi,min,max\n");
    for (const StatRow& s : r.stats) {
      std::fprintf(f, "%.3f,%s,%zu,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f\n", s.sigma,
                   std::string(to_string(s.mode)).c_str(), s.box.n, s.box.mean, s.box.median, s.box.q1, s.box.q3,
                   s.box.whisker_lo, s.box.whisker_hi, s.box.min, s.box.max);
    }
    std::fclose(f);
  }
  {
    // Wall-clock numbers vary between executions, so they live apart from the
    // deterministic tables above.
    std::FILE* f = std::fopen((fs::path(out_dir) / "timing.csv").string().c_str(), "w");
    if (!f) throw std::runtime_error("cannot write timing.csv");
    std::fprintf(f, "sigma,seed,mode,n_scans,median_ms,p90_ms,max_ms\n");
    for (const RunRecord& x : r.runs) {
      if (x.scan_ms.empty()) continue;
      std::fprintf(f, "%.3f,%llu,%s,%zu,%.3f,%.3f,%.3f\n", x.sigma, static_cast<unsigned long long>(x.seed),
                   std::string(to_string(x.mode)).c_str(), x.scan_ms.size(), eval::quantile(x.scan_ms, 0.5),
                   eval::quantile(x.scan_ms, 0.9), *std::max_element(x.scan_ms.begin(), x.scan_ms.end()));
    }
    std::fclose(f);
  }
  std::ofstream os(fs::path(out_dir) / "summary.txt");
  os << campaign_summary(r);
}

}  // namespace gatedlio
