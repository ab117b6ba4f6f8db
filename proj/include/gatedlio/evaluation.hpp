#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gatedlio/manifold.hpp"

namespace gatedlio::eval {

struct StampedPose {
  double t = 0.0;
  Vec3 pos = Vec3::Zero();
  Rotation rot;
};

/// Poses with strictly increasing timestamps.
class Trajectory {
 public:
  Trajectory() = default;
  /// Throws std::invalid_argument unless timestamps strictly increase.
  explicit Trajectory(std::vector<StampedPose> poses);

  /// Appends; throws std::invalid_argument on a non-increasing timestamp.
  void push_back(const StampedPose& p);
  const std::vector<StampedPose>& poses() const { return poses_; }
  std::size_t size() const { return poses_.size(); }
  bool empty() const { return poses_.empty(); }

 private:
  std::vector<StampedPose> poses_;
};

/// TUM format, one pose per line: "t x y z qx qy qz qw". Lines starting with
/// '#' are comments. Parse errors name the source and line.
Trajectory read_tum(std::istream& is, const std::string& source = "<stream>");
Trajectory read_tum_file(const std::string& path);
void write_tum(std::ostream& os, const Trajectory& traj);
void write_tum_file(const std::string& path, const Trajectory& traj);

struct PosePair {
  StampedPose est;
  StampedPose gt;
};

/// Nearest-timestamp pairing within max_dt, each ground-truth pose used at
/// most once (greedy by increasing |dt|, ties by estimate order). Pairs are
/// returned in estimate order. Throws std::runtime_error when nothing pairs.
std::vector<PosePair> associate(const Trajectory& est, const Trajectory& gt, double max_dt = 0.010);

struct RigidTransform {
  Mat3 rot = Mat3::Identity();
  Vec3 trans = Vec3::Zero();
  Vec3 apply(const Vec3& p) const { return rot * p + trans; }
};

/// Rotation + translation minimizing sum |T * p_est - p_gt|^2 (closed form,
/// no scale). Throws std::runtime_error with fewer than 3 pairs or when the
/// estimated positions are collinear.
RigidTransform align_se3(const std::vector<PosePair>& pairs);

struct AteStats {
  double max = 0.0;
  double mean = 0.0;
  double rmse = 0.0;
  std::vector<double> errors;
};

AteStats ate(const std::vector<PosePair>& pairs, const RigidTransform& transform);

/// associate + align_se3 + ate.
AteStats evaluate(const Trajectory& est, const Trajectory& gt, double max_dt = 0.010);

struct BoxSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0, q3 = 0.0;
  double whisker_lo = 0.0, whisker_hi = 0.0;  // extreme data within 1.5 IQR of the box
  double min = 0.0, max = 0.0;
};

/// Quantile with linear interpolation between order statistics:
/// position (n - 1) * q on the sorted data.
double quantile(std::vector<double> values, double q);

/// Box-plot summary of a sample. Throws std::invalid_argument when empty.
BoxSummary aggregate(const std::vector<double>& values);
/// Summary of the per-run mean ATEs.
BoxSummary aggregate(const std::vector<AteStats>& runs);

}  // namespace gatedlio::eval
