#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gatedlio/config.hpp"
#include "gatedlio/crlb.hpp"
#include "gatedlio/dataset_io.hpp"
#include "gatedlio/evaluation.hpp"
#include "gatedlio/iekf_update.hpp"

namespace gatedlio {

/// Walks an IMU stream forward, propagating state and covariance with the
/// piecewise-constant interval input.
class ImuIntegrator {
 public:
  ImuIntegrator(std::span<const ImuSample> imu, const NoiseParams& noise, NavState x, CovMatrix p, double t);

  /// Propagate to time t (>= current time). Throws std::runtime_error when
  /// the IMU stream does not reach t.
  void propagate_to(double t);

  const NavState& state() const { return x_; }
  const CovMatrix& cov() const { return p_; }
  double time() const { return t_; }
  void reset(const NavState& x, const CovMatrix& p) {
    x_ = x;
    p_ = p;
  }
  /// True if every covariance produced so far was symmetric PSD.
  bool cov_ok() const { return cov_ok_; }

 private:
  std::span<const ImuSample> imu_;
  NoiseParams noise_;
  NavState x_;
  CovMatrix p_;
  double t_;
  std::size_t k_ = 0;  // imu_[k_].t <= t_ < imu_[k_ + 1].t
  bool cov_ok_ = true;
};

/// Mean of the first `window` seconds of a stationary IMU stream: gyro mean
/// becomes the gyro bias, the accelerometer mean fixes roll/pitch (yaw = 0)
/// and the gravity magnitude. Position/velocity/accel bias are zero and the
/// extrinsics are taken from the rig.
NavState static_initialize(std::span<const ImuSample> imu, double window, const sim::SensorRig& rig);

struct ScanDiagnostics {
  double t = 0.0;
  int iterations = 0;
  bool converged = false;
  std::size_t n_points = 0;
  bool degenerate = false;
  bool used_odometry = false;
  bool odometry_fallback = false;
  double cost = 0.0;
  Vec3 eig_rot = Vec3::Zero();
  Vec3 eig_trans = Vec3::Zero();
  bool cov_ok = true;
  bool cost_monotone = true;
  double wall_ms = 0.0;
};

/// Everything an update saw; passed to the optional observer.
struct UpdateContext {
  const LidarScan& scan;  // undistorted, strided
  const PointMap& map;
  const NavState& x_pred;
  const UpdateResult& result;
  const std::optional<OdometryInput>& odom;
};

struct RunResult {
  eval::Trajectory trajectory;  // IMU pose at the start and after every scan
  std::vector<ScanDiagnostics> diagnostics;
  bool cov_ok = true;         // every propagated and updated covariance PSD
  bool cost_monotone = true;  // cost never rose within an update iteration
  bool gating_ok = true;      // used_odometry implies degenerate (gated mode)
  NavState final_state;
  CovMatrix final_cov = CovMatrix::Zero();
};

using UpdateObserver = std::function<void(const UpdateContext&)>;

/// Streams the data through the filter in timestamp order. Deterministic given
/// (data, cfg) apart from wall_ms.
RunResult run_filter(const SensorData& data, const RunConfig& cfg, const UpdateObserver& observer = {});

/// trajectory.tum, diagnostics.csv and config.toml in out_dir.
void write_run_outputs(const std::string& out_dir, const RunResult& r, const RunConfig& cfg);
void write_diagnostics_csv(const std::string& path, const std::vector<ScanDiagnostics>& diag);

struct RunRecord {
  double sigma = 0.0;
  std::uint64_t seed = 0;
  FusionMode mode = FusionMode::kDegenerationGated;
  eval::AteStats ate;
  std::size_t n_scans = 0;
  std::size_t n_degenerate = 0;
  std::size_t n_used_odometry = 0;
  std::size_t n_fallback = 0;
  bool cov_ok = false;
  bool cost_monotone = false;
  bool gating_ok = false;
  std::vector<double> scan_ms;
  std::string error;  // empty on success
};

struct StatRow {
  double sigma = 0.0;
  FusionMode mode = FusionMode::kDegenerationGated;
  eval::BoxSummary box;
};

struct CampaignResult {
  std::vector<RunRecord> runs;  // ordered by (sigma, seed, mode)
  std::vector<StatRow> stats;   // ordered by (sigma, mode)
  bool all_ok = true;           // no crashes, all invariants held
};

/// Config of one campaign run: base with seed, simulated and assumed LiDAR
/// noise, plane tolerance (max(base, 3 sigma)) and fusion mode set.
RunConfig campaign_run_config(const RunConfig& base, double sigma, std::uint64_t seed, FusionMode mode);

/// For each sigma x seed a dataset is generated in memory and shared by all
/// modes. Runs execute concurrently; outputs are written afterwards in a fixed
/// order. out_dir may be empty to skip writing.
CampaignResult run_campaign(const RunConfig& base, const std::string& out_dir);

/// Writes runs.csv, stats.csv, timing.csv and summary.txt.
void write_campaign_outputs(const std::string& out_dir, const CampaignResult& r);
std::string campaign_summary(const CampaignResult& r);

enum class CrlbSource { kSynthetic, kHarvested };

struct CrlbInstanceReport {
  CrlbSource source = CrlbSource::kSynthetic;
  std::size_t instance = 0;
  std::uint64_t seed = 0;
  double eigmin_gap = 0.0;
  double trace_li = 0.0;
  double cond_c = 0.0;
  double cond_e = 0.0;
  double oracle_err_li = 0.0;  // relative max-abs error vs dense inverse
  double oracle_err_pf = 0.0;
  bool certified = false;
  bool passed = false;  // certified and both oracle errors <= 1e-8
  std::string error;
};

/// Information matrices of one certification instance, column layout as in
/// crlb.hpp.
struct CrlbInstance {
  Eigen::MatrixXd j_li;  // 12x12
  Eigen::MatrixXd j_pf;  // 18x18
};

/// Random full-rank LiDAR (40 x 12) and odometry (18 x 12) Jacobians with
/// random diagonal noise.
CrlbInstance synthetic_crlb_instance(std::uint64_t seed);

/// Instances from a corridor simulation: per update, LiDAR rows at the
/// posterior and the odometry rows, plus extrinsic prior information (P0) so
/// pose and extrinsics are jointly identifiable.
std::vector<CrlbInstance> harvest_crlb_instances(std::size_t n, std::uint64_t seed);

CrlbInstanceReport certify_instance(const CrlbInstance& inst);

std::vector<CrlbInstanceReport> run_crlb_cert(std::size_t n_instances, std::uint64_t seed, CrlbSource source);
void write_crlb_report(const std::string& path, const std::vector<CrlbInstanceReport>& reports);

std::string_view to_string(CrlbSource s);

}  // namespace gatedlio
