#include "gatedlio/crlb.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace gatedlio::crlb {

namespace {

constexpr double kMaxCondition = 1e12;
constexpr double kLayoutTol = 1e-9;

Mat6 sym(const Mat6& m) { return 0.5 * (m + m.transpose()); }

Mat6 checked_inverse(const Mat6& m, const char* what) {
  const double cond = condition_number(m);
  if (!(cond < kMaxCondition)) {
    throw std::runtime_error(std::string(what) + " is singular (condition number " + std::to_string(cond) + ")");
  }
  return sym(m.inverse());
}

}  // namespace

double condition_number(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseAbs();
  const double lo = ev.minCoeff();
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return ev.maxCoeff() / lo;
}

Eigen::MatrixXd fisher(const Eigen::MatrixXd& h, const Eigen::MatrixXd& r) {
  if (r.rows() != h.rows() || r.cols() != h.rows()) {
    throw std::invalid_argument("fisher: R must be rows(H) x rows(H)");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("fisher: R is not positive definite");
  const Eigen::MatrixXd j = h.transpose() * llt.solve(h);
  return 0.5 * (j + j.transpose());
}

FisherBlocks split_blocks(const Eigen::MatrixXd& j_li) {
  if (j_li.rows() != 12 || j_li.cols() != 12) throw std::invalid_argument("split_blocks: J_li must be 12x12");
  FisherBlocks b;
  b.u = j_li.block<6, 6>(kPose, kPose);
  b.b = j_li.block<6, 6>(kPose, kLidarExt);
  b.c = j_li.block<6, 6>(kLidarExt, kLidarExt);
  return b;
}

FisherBlocks split_blocks(const Eigen::MatrixXd& j_li, const Eigen::MatrixXd& j_pf) {
  if (j_pf.rows() != 18 || j_pf.cols() != 18) throw std::invalid_argument("split_blocks: J_pf must be 18x18");
  FisherBlocks b = split_blocks(j_li);
  const double cross = j_pf.block<6, 6>(kLidarExt, kOdomExt).cwiseAbs().maxCoeff();
  if (cross > kLayoutTol) {
    throw std::invalid_argument("split_blocks: LiDAR/odometry extrinsic cross block is non-zero (" +
                                std::to_string(cross) + ")");
  }
  const double scale = std::max(1.0, j_li.cwiseAbs().maxCoeff());
  const double mismatch = std::max((j_pf.block<6, 6>(kPose, kLidarExt) - b.b).cwiseAbs().maxCoeff(),
                                   (j_pf.block<6, 6>(kLidarExt, kLidarExt) - b.c).cwiseAbs().maxCoeff());
  if (mismatch > 1e-9 * scale) {
    throw std::invalid_argument("split_blocks: J_pf LiDAR blocks differ from J_li");
  }
  b.f = j_pf.block<6, 6>(kPose, kPose) - b.u;
  b.d = j_pf.block<6, 6>(kPose, kOdomExt);
  b.e = j_pf.block<6, 6>(kOdomExt, kOdomExt);
  return b;
}

Eigen::MatrixXd assemble_li(const FisherBlocks& b) {
  Eigen::MatrixXd j(12, 12);
  j << b.u, b.b, b.b.transpose(), b.c;
  return j;
}

Eigen::MatrixXd assemble_pf(const FisherBlocks& b) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(18, 18);
  j.block<6, 6>(kPose, kPose) = b.u + b.f;
  j.block<6, 6>(kPose, kLidarExt) = b.b;
  j.block<6, 6>(kLidarExt, kPose) = b.b.transpose();
  j.block<6, 6>(kLidarExt, kLidarExt) = b.c;
  j.block<6, 6>(kPose, kOdomExt) = b.d;
  j.block<6, 6>(kOdomExt, kPose) = b.d.transpose();
  j.block<6, 6>(kOdomExt, kOdomExt) = b.e;
  return j;
}

namespace {
Mat6 lidar_schur(const FisherBlocks& b) {
  const Mat6 c_inv = checked_inverse(b.c, "C (LiDAR extrinsic information)");
  return sym(b.u - b.b * c_inv * b.b.transpose());
}
}  // namespace

Mat6 crlb_pure_lidar(const FisherBlocks& b) {
  return checked_inverse(lidar_schur(b), "LiDAR-only pose information");
}

Mat6 crlb_pose_fusion(const FisherBlocks& b) {
  const Mat6 e_inv = checked_inverse(b.e, "E (odometry extrinsic information)");
  const Mat6 info = lidar_schur(b) + sym(b.f - b.d * e_inv * b.d.transpose());
  return checked_inverse(info, "pose-fusion pose information");
}

CrlbResult compute(const FisherBlocks& b) {
  CrlbResult r;
  r.crlb_li = crlb_pure_lidar(b);
  r.crlb_pf = crlb_pose_fusion(b);
  Eigen::SelfAdjointEigenSolver<Mat6> es(sym(r.crlb_li - r.crlb_pf), Eigen::EigenvaluesOnly);
  r.psd_gap_eigmin = es.eigenvalues()[0];
  return r;
}

bool certify_ordering(const CrlbResult& r) {
  return r.psd_gap_eigmin >= -1e-9 * r.crlb_li.trace();
}

}  // namespace gatedlio::crlb
