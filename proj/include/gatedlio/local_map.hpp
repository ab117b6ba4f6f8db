#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <unordered_set>
#include <vector>

#include "gatedlio/manifold.hpp"

namespace gatedlio {

struct Neighbor {
  Vec3 point;
  double dist2 = 0.0;
  std::size_t index = 0;  // insertion order
};

/// Static kd-tree over a point array. Nearest-neighbour results are exact and
/// ordered by (distance, index).
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::span<const Vec3> points);

  std::size_t size() const { return points_.size(); }
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const;

 private:
  struct Node {
    int axis = -1;         // -1 for leaves
    double split = 0.0;
    std::uint32_t begin = 0, end = 0;  // leaf range into order_
    std::int32_t left = -1, right = -1;
  };
  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, const Vec3& q, std::size_t k, std::vector<Neighbor>& best) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

struct MapParams {
  double voxel_size = 0.25;          // m
  std::size_t rebuild_threshold = 4096;
};

/// World-frame point map. Incoming points are voxel-downsampled (per new
/// voxel the point nearest its centre; voxels already occupied are left
/// unchanged). A new point closer than half a voxel to a point already in the
/// map is dropped.
/// Points added since the last full build live in a small secondary tree that
/// is rebuilt on every insertion; queries merge both, so they are always exact.
class PointMap {
 public:
  explicit PointMap(MapParams params = {});

  void insert_scan(std::span<const Vec3> world_points);
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const;

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<Vec3>& points() const { return points_; }
  const MapParams& params() const { return params_; }

  void write_csv(std::ostream& os) const;

 private:
  struct KeyHash {
    std::size_t operator()(const Eigen::Vector3i& k) const noexcept;
  };
  struct KeyEq {
    bool operator()(const Eigen::Vector3i& a, const Eigen::Vector3i& b) const noexcept { return a == b; }
  };
  Eigen::Vector3i key_of(const Vec3& p) const;
  void rebuild();

  MapParams params_;
  std::vector<Vec3> points_;
  std::unordered_set<Eigen::Vector3i, KeyHash, KeyEq> occupied_;
  KdTree tree_;
  KdTree pending_;           // points_[indexed_, size) with local indices
  std::size_t indexed_ = 0;  // points_[0, indexed_) are in tree_
};

struct PlaneFit {
  Vec3 normal = Vec3::UnitZ();
  Vec3 anchor = Vec3::Zero();
  bool valid = false;
  double rms = 0.0;
};

/// Least-squares plane through the centroid (normal = smallest eigenvector of
/// the scatter matrix). Invalid when any point lies farther than plane_tol
/// from the plane, or when the points are too close to a line: the rms spread
/// along the second principal axis must be at least min_spread_ratio times
/// the spread along the first. Needs >= 5 points, throws
/// std::invalid_argument otherwise.
PlaneFit fit_plane(std::span<const Vec3> points, double plane_tol, double min_spread_ratio = 0.0);

}  // namespace gatedlio
