#include "gatedlio/degeneracy.hpp"

#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace gatedlio {

Mat6 pose_hessian(std::span<const LidarResidualRow> rows, std::span<const double> noise_var) {
  if (rows.size() != noise_var.size()) {
    throw std::invalid_argument("pose_hessian: rows and noise_var differ in length");
  }
  Mat6 h = Mat6::Zero();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Eigen::Matrix<double, 1, 6> j = rows[i].jacobian.segment<6>(idx::kRot);
    h.noalias() += j.transpose() * j / noise_var[i];
  }
  return 0.5 * (h + h.transpose());
}

DegeneracyReport detect(const Mat6& h, const DegeneracyThresholds& thresholds) {
  DegeneracyReport r;
  r.threshold_rot = thresholds.rot;
  r.threshold_trans = thresholds.trans;
  Eigen::SelfAdjointEigenSolver<Mat3> rot(h.topLeftCorner<3, 3>());
  Eigen::SelfAdjointEigenSolver<Mat3> trans(h.bottomRightCorner<3, 3>());
  r.eig_rot = rot.eigenvalues();
  r.dir_rot = rot.eigenvectors();
  r.eig_trans = trans.eigenvalues();
  r.dir_trans = trans.eigenvectors();
  r.rot_degenerate = r.eig_rot[0] < thresholds.rot;
  r.trans_degenerate = r.eig_trans[0] < thresholds.trans;
  r.degenerate = r.rot_degenerate || r.trans_degenerate;
  return r;
}

}  // namespace gatedlio
