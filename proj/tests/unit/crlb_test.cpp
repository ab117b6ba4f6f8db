#include <random>

#include <gtest/gtest.h>

#include "gatedlio/crlb.hpp"
#include "gatedlio/pipeline.hpp"

namespace gatedlio {
namespace {

double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

TEST(Crlb, FisherIsHtRinvH) {
  const Eigen::MatrixXd h = Eigen::MatrixXd::Random(8, 3);
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(8, 8) * 2.0;
  r(0, 1) = r(1, 0) = 0.5;
  const Eigen::MatrixXd j = crlb::fisher(h, r);
  EXPECT_LT(rel_err(j, h.transpose() * r.inverse() * h), 1e-12);
  EXPECT_THROW(crlb::fisher(h, -r), std::invalid_argument);
  EXPECT_THROW(crlb::fisher(h, Eigen::MatrixXd::Identity(3, 3)), std::invalid_argument);
}

TEST(Crlb, SchurMatchesDenseInverse) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const CrlbInstance inst = synthetic_crlb_instance(seed);
    const crlb::FisherBlocks b = crlb::split_blocks(inst.j_li, inst.j_pf);
    EXPECT_LT(rel_err(crlb::assemble_pf(b), inst.j_pf), 1e-15);
    const Mat6 li = crlb::crlb_pure_lidar(b);
    const Mat6 pf = crlb::crlb_pose_fusion(b);
    EXPECT_LT(rel_err(li, inst.j_li.inverse().topLeftCorner<6, 6>()), 1e-8);
    EXPECT_LT(rel_err(pf, inst.j_pf.inverse().topLeftCorner<6, 6>()), 1e-8);
    const crlb::CrlbResult r = crlb::compute(b);
    EXPECT_TRUE(crlb::certify_ordering(r));
    EXPECT_GE(r.psd_gap_eigmin, -1e-9 * r.crlb_li.trace());
  }
}

TEST(Crlb, NoOdometryMeansEqualBounds) {
  const CrlbInstance inst = synthetic_crlb_instance(3);
  crlb::FisherBlocks b = crlb::split_blocks(inst.j_li);
  b.e = Mat6::Identity();
  const crlb::CrlbResult r = crlb::compute(b);
  EXPECT_LT(rel_err(r.crlb_pf, r.crlb_li), 1e-12);
  EXPECT_TRUE(crlb::certify_ordering(r));
}

TEST(Crlb, SingularBlocksThrow) {
  const CrlbInstance inst = synthetic_crlb_instance(4);
  crlb::FisherBlocks b = crlb::split_blocks(inst.j_li, inst.j_pf);
  crlb::FisherBlocks sc = b;
  sc.c = Mat6::Zero();
  EXPECT_THROW(crlb::crlb_pure_lidar(sc), std::runtime_error);
  crlb::FisherBlocks se = b;
  se.e = Mat6::Zero();
  EXPECT_THROW(crlb::crlb_pose_fusion(se), std::runtime_error);
}

TEST(Crlb, LayoutViolationRejected) {
  CrlbInstance inst = synthetic_crlb_instance(5);
  inst.j_pf(7, 13) = inst.j_pf(13, 7) = 1.0;
  EXPECT_THROW(crlb::split_blocks(inst.j_li, inst.j_pf), std::invalid_argument);
  EXPECT_THROW(crlb::split_blocks(Eigen::MatrixXd::Identity(6, 6)), std::invalid_argument);
}

TEST(Crlb, CertifiesHarvestedInstances) {
  const auto reports = run_crlb_cert(4, 9, CrlbSource::kHarvested);
  ASSERT_EQ(reports.size(), 4u);
  for (const auto& r : reports) {
    EXPECT_TRUE(r.passed) << r.error;
    EXPECT_LE(r.oracle_err_li, 1e-8);
    EXPECT_LE(r.oracle_err_pf, 1e-8);
  }
}

}  // namespace
}  // namespace gatedlio
