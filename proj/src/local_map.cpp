#include "gatedlio/local_map.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include <Eigen/Eigenvalues>

namespace gatedlio {

namespace {

constexpr std::uint32_t kLeafSize = 8;

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
}

// Sorted (ascending by (dist2, index)) list bounded to k entries. k is small,
// so insertion beats a heap.
void offer(std::vector<Neighbor>& best, std::size_t k, const Neighbor& n) {
  if (best.size() == k) {
    if (!closer(n, best.back())) return;
    best.pop_back();
  }
  auto it = best.end();
  while (it != best.begin() && closer(n, *(it - 1))) --it;
  best.insert(it, n);
}

double bound(const std::vector<Neighbor>& best, std::size_t k) {
  return best.size() < k ? std::numeric_limits<double>::infinity() : best.back().dist2;
}

}  // namespace

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.emplace_back();
  if (end - begin <= kLeafSize) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis;
  (hi - lo).maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  Node& n = nodes_[id];
  n.axis = axis;
  n.split = split;
  n.left = left;
  n.right = right;
  return id;
}

void KdTree::search(std::int32_t id, const Vec3& q, std::size_t k, std::vector<Neighbor>& best) const {
  const Node& n = nodes_[id];
  if (n.axis < 0) {
    for (std::uint32_t i = n.begin; i < n.end; ++i) {
      const std::uint32_t pi = order_[i];
      const double d2 = (points_[pi] - q).squaredNorm();
      if (d2 <= bound(best, k)) offer(best, k, Neighbor{points_[pi], d2, pi});
    }
    return;
  }
  // Left subtree holds coords <= split, right holds coords >= split.
  const double diff = q[n.axis] - n.split;
  const std::int32_t near = diff < 0.0 ? n.left : n.right;
  const std::int32_t far = diff < 0.0 ? n.right : n.left;
  search(near, q, k, best);
  if (diff * diff <= bound(best, k)) {
    search(far, q, k, best);
  }
}

std::vector<Neighbor> KdTree::knn(const Vec3& query, std::size_t k) const {
  std::vector<Neighbor> best;
  if (points_.empty() || k == 0) return best;
  k = std::min(k, points_.size());
  best.reserve(k + 1);
  search(0, query, k, best);
  return best;
}

std::size_t PointMap::KeyHash::operator()(const Eigen::Vector3i& k) const noexcept {
  const auto h = static_cast<std::uint64_t>(k.x()) * 73856093ULL ^
                 static_cast<std::uint64_t>(k.y()) * 19349663ULL ^
                 static_cast<std::uint64_t>(k.z()) * 83492791ULL;
  return static_cast<std::size_t>(h);
}

PointMap::PointMap(MapParams params) : params_(params) {
  if (!(params_.voxel_size > 0.0)) throw std::invalid_argument("PointMap: voxel_size must be positive");
}

Eigen::Vector3i PointMap::key_of(const Vec3& p) const {
  return (p / params_.voxel_size).array().floor().cast<int>();
}

void PointMap::insert_scan(std::span<const Vec3> world_points) {
  // Per voxel not yet in the map keep the point nearest the voxel centre, so
  // map points are always measured points (a centroid can fall off a corner).
  std::vector<Eigen::Vector3i> keys;
  std::vector<Vec3> best;
  std::vector<double> best_d2;
  std::unordered_map<Eigen::Vector3i, std::size_t, KeyHash, KeyEq> slot;
  for (const Vec3& p : world_points) {
    if (!p.allFinite()) throw std::invalid_argument("PointMap::insert_scan: non-finite point");
    const Eigen::Vector3i key = key_of(p);
    if (occupied_.count(key)) continue;
    const Vec3 centre = (key.cast<double>().array() + 0.5).matrix() * params_.voxel_size;
    const double d2 = (p - centre).squaredNorm();
    auto [it, fresh] = slot.try_emplace(key, keys.size());
    if (fresh) {
      keys.push_back(key);
      best.push_back(p);
      best_d2.push_back(d2);
    } else if (d2 < best_d2[it->second]) {
      best[it->second] = p;
      best_d2[it->second] = d2;
    }
  }
  // A surface lying on a voxel boundary would otherwise be stored twice, a
  // hair apart, in the voxels on either side; such pairs make a 5-point
  // neighbourhood fit a plane through only three distinct points.
  const double min_d2 = 0.25 * params_.voxel_size * params_.voxel_size;
  const std::size_t before = points_.size();
  for (std::size_t i = 0; i < keys.size(); ++i) {
    occupied_.insert(keys[i]);
    if (before > 0 && knn(best[i], 1).front().dist2 < min_d2) continue;
    points_.push_back(best[i]);
  }
  if (points_.size() - indexed_ > params_.rebuild_threshold) {
    rebuild();
  } else if (points_.size() > before) {
    pending_ = KdTree(std::span<const Vec3>(points_).subspan(indexed_));
  }
}

void PointMap::rebuild() {
  tree_ = KdTree(points_);
  pending_ = KdTree();
  indexed_ = points_.size();
}

std::vector<Neighbor> PointMap::knn(const Vec3& query, std::size_t k) const {
  std::vector<Neighbor> result = tree_.knn(query, k);
  if (indexed_ == points_.size()) return result;
  k = std::min(k, points_.size());
  for (Neighbor n : pending_.knn(query, k)) {
    n.index += indexed_;
    offer(result, k, n);
  }
  return result;
}

void PointMap::write_csv(std::ostream& os) const {
  os << "x,y,z\n";
  char buf[96];
  for (const Vec3& p : points_) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g\n", p.x(), p.y(), p.z());
    os << buf;
  }
}

PlaneFit fit_plane(std::span<const Vec3> points, double plane_tol, double min_spread_ratio) {
  if (points.size() < 5) {
    throw std::invalid_argument("fit_plane: need at least 5 points, got " + std::to_string(points.size()));
  }
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Mat3 scatter = Mat3::Zero();
  for (const Vec3& p : points) {
    const Vec3 d = p - centroid;
    scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(scatter);
  const Vec3 ev = es.eigenvalues();  // ascending

  PlaneFit fit;
  fit.anchor = centroid;
  fit.normal = es.eigenvectors().col(0).normalized();
  // Near-collinear sets (a single far-range ring, say) leave the normal free
  // to rotate about the line.
  const double ratio2 = std::max(min_spread_ratio * min_spread_ratio, 1e-10);
  if (ev[2] <= 0.0 || ev[1] <= ratio2 * ev[2]) {
    fit.valid = false;
    return fit;
  }
  double sum2 = 0.0;
  bool within = true;
  for (const Vec3& p : points) {
    const double d = fit.normal.dot(p - centroid);
    sum2 += d * d;
    within = within && std::abs(d) <= plane_tol;
  }
  fit.rms = std::sqrt(sum2 / static_cast<double>(points.size()));
  fit.valid = within;
  return fit;
}

}  // namespace gatedlio
