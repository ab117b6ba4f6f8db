#pragma once

#include <Eigen/Core>

#include "gatedlio/degeneracy.hpp"

namespace gatedlio::crlb {

/// Column layout of the CRLB problems: pose [d theta, d p] (6), LiDAR
/// extrinsic (6), odometry extrinsic (6). The pure-LiDAR problem uses the
/// first 12 columns only.
inline constexpr int kPose = 0;
inline constexpr int kLidarExt = 6;
inline constexpr int kOdomExt = 12;

/// Partitioned Fisher information:
///   J_li = [[U, B], [B^T, C]]
///   J_pf = [[U + F, B, D], [B^T, C, 0], [D^T, 0, E]]
struct FisherBlocks {
  Mat6 u = Mat6::Zero();
  Mat6 b = Mat6::Zero();
  Mat6 c = Mat6::Zero();
  Mat6 f = Mat6::Zero();
  Mat6 d = Mat6::Zero();
  Mat6 e = Mat6::Zero();
};

struct CrlbResult {
  Mat6 crlb_li = Mat6::Zero();
  Mat6 crlb_pf = Mat6::Zero();
  double psd_gap_eigmin = 0.0;  // eigmin(crlb_li - crlb_pf)
};

/// J = H^T R^-1 H (symmetrized). R must be symmetric positive definite.
Eigen::MatrixXd fisher(const Eigen::MatrixXd& h, const Eigen::MatrixXd& r);

/// Blocks of a 12x12 pure-LiDAR information matrix (F, D, E left zero).
FisherBlocks split_blocks(const Eigen::MatrixXd& j_li);

/// Blocks of an 18x18 pose-fusion information matrix. The pose block of J_pf
/// is U + F, so the LiDAR-only matrix is needed to separate F. Throws
/// std::invalid_argument if the LiDAR-extrinsic x odometry-extrinsic block
/// exceeds 1e-9 (layout violation) or the LiDAR blocks disagree with j_li.
FisherBlocks split_blocks(const Eigen::MatrixXd& j_li, const Eigen::MatrixXd& j_pf);

/// Assemble J_li (12x12) or J_pf (18x18) from blocks.
Eigen::MatrixXd assemble_li(const FisherBlocks& b);
Eigen::MatrixXd assemble_pf(const FisherBlocks& b);

/// (U - B C^-1 B^T)^-1. Throws std::runtime_error when C is singular
/// (condition number >= 1e12) or the Schur complement is not invertible.
Mat6 crlb_pure_lidar(const FisherBlocks& b);

/// (U - B C^-1 B^T + F - D E^-1 D^T)^-1. Throws std::runtime_error when C or E
/// is singular.
Mat6 crlb_pose_fusion(const FisherBlocks& b);

CrlbResult compute(const FisherBlocks& b);

/// eigmin(crlb_li - crlb_pf) >= -1e-9 * trace(crlb_li).
bool certify_ordering(const CrlbResult& r);

/// 2-norm condition number of a symmetric matrix.
double condition_number(const Eigen::MatrixXd& m);

}  // namespace gatedlio::crlb
