#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "gatedlio/local_map.hpp"
#include "test_util.hpp"

namespace gatedlio {
namespace {

std::vector<Neighbor> brute_knn(const std::vector<Vec3>& pts, const Vec3& q, std::size_t k) {
  std::vector<Neighbor> all;
  for (std::size_t i = 0; i < pts.size(); ++i) all.push_back({pts[i], (pts[i] - q).squaredNorm(), i});
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
  });
  all.resize(std::min(k, all.size()));
  return all;
}

TEST(KdTree, MatchesBruteForce) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 500; ++i) pts.push_back(testing::rand_vec(rng, 5.0));
    const KdTree tree(pts);
    for (int q = 0; q < 50; ++q) {
      const Vec3 query = testing::rand_vec(rng, 6.0);
      for (std::size_t k : {1u, 5u, 17u}) {
        const auto a = tree.knn(query, k);
        const auto b = brute_knn(pts, query, k);
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].index, b[i].index);
      }
    }
  }
}

TEST(KdTree, HandlesDuplicatesAndSmallSets) {
  std::vector<Vec3> pts(10, Vec3(1, 1, 1));
  pts.push_back(Vec3(0, 0, 0));
  const KdTree tree(pts);
  const auto r = tree.knn(Vec3(1, 1, 1), 3);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].index, 0u);
  EXPECT_EQ(r[2].index, 2u);
  EXPECT_EQ(tree.knn(Vec3::Zero(), 50).size(), 11u);
  EXPECT_TRUE(KdTree().knn(Vec3::Zero(), 3).empty());
}

TEST(PointMap, DownsamplesRepeatedPoint) {
  PointMap map(MapParams{0.5, 4096});
  std::vector<Vec3> pts(100, Vec3(0.1, 0.2, 0.3));
  map.insert_scan(pts);
  EXPECT_EQ(map.size(), 1u);
  map.insert_scan(pts);
  EXPECT_EQ(map.size(), 1u);
  const auto nn = map.knn(Vec3(0.1, 0.2, 0.3), 1);
  ASSERT_EQ(nn.size(), 1u);
  EXPECT_EQ(nn[0].dist2, 0.0);
}

TEST(PointMap, KeepsPointNearestVoxelCentre) {
  PointMap map(MapParams{1.0, 4096});
  const std::vector<Vec3> pts{Vec3(0.05, 0.05, 0.05), Vec3(0.45, 0.55, 0.5), Vec3(0.9, 0.9, 0.9)};
  map.insert_scan(pts);
  ASSERT_EQ(map.size(), 1u);
  EXPECT_TRUE(map.points()[0].isApprox(pts[1]));
}

TEST(PointMap, DropsPointWithinHalfVoxelOfMap) {
  PointMap map(MapParams{0.2, 4096});
  map.insert_scan(std::vector<Vec3>{Vec3(0.19, 0.1, 0.1)});
  map.insert_scan(std::vector<Vec3>{Vec3(0.21, 0.1, 0.1)});  // next voxel, 2 cm away
  EXPECT_EQ(map.size(), 1u);
  map.insert_scan(std::vector<Vec3>{Vec3(0.45, 0.1, 0.1)});
  EXPECT_EQ(map.size(), 2u);
}

TEST(PointMap, KnnExactAcrossRebuilds) {
  // Small threshold so queries mix the main tree and the pending tree.
  std::mt19937_64 rng(32);
  PointMap map(MapParams{0.05, 300});
  for (int scan = 0; scan < 8; ++scan) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 200; ++i) pts.push_back(testing::rand_vec(rng, 3.0));
    map.insert_scan(pts);
    for (int q = 0; q < 30; ++q) {
      const Vec3 query = testing::rand_vec(rng, 3.0);
      const auto a = map.knn(query, 5);
      const auto b = brute_knn(map.points(), query, 5);
      ASSERT_EQ(a.size(), b.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].index, b[i].index) << "scan " << scan;
        EXPECT_EQ(a[i].dist2, b[i].dist2);
      }
    }
  }
}

TEST(FitPlane, ExactPlane) {
  std::vector<Vec3> pts{{0, 0, 1}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}, {0.5, 0.3, 1}};
  const PlaneFit f = fit_plane(pts, 0.01);
  EXPECT_TRUE(f.valid);
  EXPECT_NEAR(std::abs(f.normal.z()), 1.0, 1e-12);
  EXPECT_NEAR(f.rms, 0.0, 1e-12);
}

TEST(FitPlane, OutlierInvalidates) {
  std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0.5, 0.5, 0.3}};
  EXPECT_FALSE(fit_plane(pts, 0.1).valid);
}

TEST(FitPlane, CollinearInvalid) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 5; ++i) pts.push_back(Vec3(i, 2.0 * i, -i));
  EXPECT_FALSE(fit_plane(pts, 0.1).valid);
  // Nearly collinear: spread ratio 0.01 is below 0.1.
  pts[2].y() += 0.02;
  EXPECT_TRUE(fit_plane(pts, 0.1).valid);
  EXPECT_FALSE(fit_plane(pts, 0.1, 0.1).valid);
}

TEST(FitPlane, NoisyPlaneNormalWithinTwoDegrees) {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> n(0.0, 0.005);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Vec3 normal = Vec3(0.2, -0.3, 1.0).normalized();
  const Vec3 e1 = normal.unitOrthogonal(), e2 = normal.cross(e1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 20; ++i) pts.push_back(u(rng) * e1 + u(rng) * e2 + n(rng) * normal);
    const PlaneFit f = fit_plane(pts, 0.1, 0.1);
    ASSERT_TRUE(f.valid);
    EXPECT_LT(std::acos(std::min(1.0, std::abs(f.normal.dot(normal)))), 2.0 * M_PI / 180.0);
  }
}

TEST(FitPlane, TooFewPointsThrows) {
  std::vector<Vec3> pts(4, Vec3::Zero());
  EXPECT_THROW(fit_plane(pts, 0.1), std::invalid_argument);
}

}  // namespace
}  // namespace gatedlio
