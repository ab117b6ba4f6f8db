#include "gatedlio/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

namespace gatedlio::eval {

Trajectory::Trajectory(std::vector<StampedPose> poses) {
  for (const auto& p : poses) push_back(p);
}

void Trajectory::push_back(const StampedPose& p) {
  if (!poses_.empty() && !(p.t > poses_.back().t)) {
    std::ostringstream msg;
    msg << std::setprecision(17) << "trajectory timestamps must increase (" << poses_.back().t << " then " << p.t << ")";
    throw std::invalid_argument(msg.str());
  }
  poses_.push_back(p);
}

Trajectory read_tum(std::istream& is, const std::string& source) {
  Trajectory traj;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double v[8];
    for (double& x : v) {
      if (!(ls >> x)) throw std::runtime_error(source + ":" + std::to_string(line_no) + ": expected 8 numbers");
    }
    std::string extra;
    if (ls >> extra) throw std::runtime_error(source + ":" + std::to_string(line_no) + ": trailing data");
    StampedPose p;
    p.t = v[0];
    p.pos = Vec3(v[1], v[2], v[3]);
    const Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (!(q.norm() > 1e-9)) throw std::runtime_error(source + ":" + std::to_string(line_no) + ": zero quaternion");
    p.rot = Rotation(q);
    try {
      traj.push_back(p);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return traj;
}

Trajectory read_tum_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_tum(is, path);
}

void write_tum(std::ostream& os, const Trajectory& traj) {
  char buf[256];
  for (const auto& p : traj.poses()) {
    std::snprintf(buf, sizeof(buf), "%.9f %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n", p.t, p.pos.x(), p.pos.y(), p.pos.z(),
                  p.rot.x(), p.rot.y(), p.rot.z(), p.rot.w());
    os << buf;
  }
}

void write_tum_file(const std::string& path, const Trajectory& traj) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_tum(os, traj);
}

std::vector<PosePair> associate(const Trajectory& est, const Trajectory& gt, double max_dt) {
  const auto& e = est.poses();
  const auto& g = gt.poses();
  // (|dt|, est index, gt index)
  std::vector<std::tuple<double, std::size_t, std::size_t>> cand;
  for (std::size_t i = 0; i < e.size(); ++i) {
    auto it = std::lower_bound(g.begin(), g.end(), e[i].t - max_dt,
                               [](const StampedPose& p, double t) { return p.t < t; });
    for (; it != g.end() && it->t <= e[i].t + max_dt; ++it) {
      cand.emplace_back(std::abs(it->t - e[i].t), i, static_cast<std::size_t>(it - g.begin()));
    }
  }
  std::sort(cand.begin(), cand.end());
  std::vector<int> est_match(e.size(), -1);
  std::vector<char> gt_used(g.size(), 0);
  for (const auto& [dt, i, j] : cand) {
    if (est_match[i] >= 0 || gt_used[j]) continue;
    est_match[i] = static_cast<int>(j);
    gt_used[j] = 1;
  }
  std::vector<PosePair> pairs;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (est_match[i] >= 0) pairs.push_back({e[i], g[static_cast<std::size_t>(est_match[i])]});
  }
  if (pairs.empty()) throw std::runtime_error("associate: no pose pairs within max_dt");
  return pairs;
}

RigidTransform align_se3(const std::vector<PosePair>& pairs) {
  if (pairs.size() < 3) throw std::runtime_error("align_se3: need at least 3 pairs");
  const auto n = static_cast<Eigen::Index>(pairs.size());
  Eigen::Matrix3Xd src(3, n), dst(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    src.col(i) = pairs[static_cast<std::size_t>(i)].est.pos;
    dst.col(i) = pairs[static_cast<std::size_t>(i)].gt.pos;
  }
  const Eigen::Matrix3Xd centered = src.colwise() - src.rowwise().mean();
  Eigen::SelfAdjointEigenSolver<Mat3> es(centered * centered.transpose(), Eigen::EigenvaluesOnly);
  const Vec3 ev = es.eigenvalues();
  if (!(ev[1] > 1e-12 * std::max(ev[2], 1e-300))) {
    throw std::runtime_error("align_se3: estimated positions are collinear");
  }
  const Eigen::Matrix4d t = Eigen::umeyama(src, dst, false);
  RigidTransform out;
  out.rot = t.topLeftCorner<3, 3>();
  out.trans = t.topRightCorner<3, 1>();
  return out;
}

AteStats ate(const std::vector<PosePair>& pairs, const RigidTransform& transform) {
  AteStats s;
  if (pairs.empty()) return s;
  double sum = 0.0, sum2 = 0.0;
  for (const auto& p : pairs) {
    const double err = (transform.apply(p.est.pos) - p.gt.pos).norm();
    s.errors.push_back(err);
    s.max = std::max(s.max, err);
    sum += err;
    sum2 += err * err;
  }
  const auto n = static_cast<double>(pairs.size());
  s.mean = sum / n;
  s.rmse = std::sqrt(sum2 / n);
  return s;
}

AteStats evaluate(const Trajectory& est, const Trajectory& gt, double max_dt) {
  const auto pairs = associate(est, gt, max_dt);
  return ate(pairs, align_se3(pairs));
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

BoxSummary aggregate(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("aggregate: no runs");
  std::vector<double> v = values;
  std::sort(v.begin(), v.end());
  BoxSummary b;
  b.n = v.size();
  b.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  b.median = quantile(v, 0.5);
  b.q1 = quantile(v, 0.25);
  b.q3 = quantile(v, 0.75);
  b.min = v.front();
  b.max = v.back();
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr, hi_fence = b.q3 + 1.5 * iqr;
  b.whisker_lo = *std::find_if(v.begin(), v.end(), [&](double x) { return x >= lo_fence; });
  b.whisker_hi = *std::find_if(v.rbegin(), v.rend(), [&](double x) { return x <= hi_fence; });
  return b;
}

BoxSummary aggregate(const std::vector<AteStats>& runs) {
  std::vector<double> means;
  means.reserve(runs.size());
  for (const auto& r : runs) means.push_back(r.mean);
  return aggregate(means);
}

}  // namespace gatedlio::eval
