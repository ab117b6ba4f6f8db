#include "gatedlio/iekf_update.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace gatedlio {

std::string_view to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::kLidarOnly: return "lidar_only";
    case FusionMode::kDegenerationGated: return "degeneration_gated";
    case FusionMode::kAlwaysFused: return "always_fused";
  }
  return "unknown";
}

FusionMode fusion_mode_from_string(std::string_view s) {
  if (s == "lidar_only") return FusionMode::kLidarOnly;
  if (s == "degeneration_gated") return FusionMode::kDegenerationGated;
  if (s == "always_fused") return FusionMode::kAlwaysFused;
  throw std::invalid_argument("unknown fusion mode '" + std::string(s) + "'");
}

CovMatrix MeasurementStack::information() const {
  CovMatrix info = CovMatrix::Zero();
  const std::size_t nl = lidar_rows();
  if (nl > 0) {
    // LiDAR rows only touch the pose and LiDAR-extrinsic columns.
    const auto n = static_cast<Eigen::Index>(nl);
    Eigen::Matrix<double, Eigen::Dynamic, 12> j(n, 12), jw(n, 12);
    j.leftCols<6>() = jacobian.block(0, idx::kRot, n, 6);
    j.rightCols<6>() = jacobian.block(0, idx::kRotIL, n, 6);
    for (Eigen::Index i = 0; i < n; ++i) jw.row(i) = j.row(i) / lidar_var[static_cast<std::size_t>(i)];
    const Eigen::Matrix<double, 12, 12> b = j.transpose() * jw;
    info.block<6, 6>(idx::kRot, idx::kRot) = b.topLeftCorner<6, 6>();
    info.block<6, 6>(idx::kRot, idx::kRotIL) = b.topRightCorner<6, 6>();
    info.block<6, 6>(idx::kRotIL, idx::kRot) = b.bottomLeftCorner<6, 6>();
    info.block<6, 6>(idx::kRotIL, idx::kRotIL) = b.bottomRightCorner<6, 6>();
  }
  if (used_odometry) {
    const auto hr = jacobian.middleRows<3>(static_cast<Eigen::Index>(nl));
    const auto hp = jacobian.middleRows<3>(static_cast<Eigen::Index>(nl) + 3);
    info.noalias() += hr.transpose() * cov_rot.inverse() * hr;
    info.noalias() += hp.transpose() * cov_pos.inverse() * hp;
  }
  return 0.5 * (info + info.transpose());
}

ErrorState MeasurementStack::information_vector() const {
  ErrorState b = ErrorState::Zero();
  const std::size_t nl = lidar_rows();
  for (std::size_t i = 0; i < nl; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    b.noalias() += jacobian.row(ii).transpose() * (residual[ii] / lidar_var[i]);
  }
  if (used_odometry) {
    const auto n = static_cast<Eigen::Index>(nl);
    b.noalias() += jacobian.middleRows<3>(n).transpose() * cov_rot.inverse() * residual.segment<3>(n);
    b.noalias() += jacobian.middleRows<3>(n + 3).transpose() * cov_pos.inverse() * residual.segment<3>(n + 3);
  }
  return b;
}

double MeasurementStack::weighted_sq_norm() const {
  double c = 0.0;
  const std::size_t nl = lidar_rows();
  for (std::size_t i = 0; i < nl; ++i) {
    const double r = residual[static_cast<Eigen::Index>(i)];
    c += r * r / lidar_var[i];
  }
  if (used_odometry) {
    const auto n = static_cast<Eigen::Index>(nl);
    const Vec3 rr = residual.segment<3>(n);
    const Vec3 rp = residual.segment<3>(n + 3);
    c += rr.dot(cov_rot.ldlt().solve(rr)) + rp.dot(cov_pos.ldlt().solve(rp));
  }
  return c;
}

MeasurementStack build_stack(std::span<const LidarResidualRow> rows, std::span<const double> lidar_var,
                             const std::optional<OdomResidual>& odom,
                             const std::optional<RelPoseMeasurement>& odom_meas,
                             const DegeneracyReport& report, FusionMode mode) {
  if (rows.size() != lidar_var.size()) {
    throw std::invalid_argument("build_stack: rows and lidar_var differ in length");
  }
  MeasurementStack s;
  bool want_odom = false;
  switch (mode) {
    case FusionMode::kLidarOnly: want_odom = false; break;
    case FusionMode::kDegenerationGated: want_odom = report.degenerate; break;
    case FusionMode::kAlwaysFused: want_odom = true; break;
  }
  s.used_odometry = want_odom && odom.has_value() && odom_meas.has_value();
  const auto nl = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index n = nl + (s.used_odometry ? 6 : 0);
  s.residual.resize(n);
  s.jacobian.resize(n, kStateDim);
  s.lidar_var.assign(lidar_var.begin(), lidar_var.end());
  for (Eigen::Index i = 0; i < nl; ++i) {
    s.residual[i] = rows[static_cast<std::size_t>(i)].residual;
    s.jacobian.row(i) = rows[static_cast<std::size_t>(i)].jacobian;
  }
  if (s.used_odometry) {
    s.residual.segment<3>(nl) = odom->r_rot;
    s.residual.segment<3>(nl + 3) = odom->r_pos;
    s.jacobian.middleRows<3>(nl) = odom->h_rot;
    s.jacobian.middleRows<3>(nl + 3) = odom->h_pos;
    s.cov_rot = odom_meas->cov_rot;
    s.cov_pos = odom_meas->cov_pos;
  }
  return s;
}

CovMatrix m_matrix(const NavState& x_kappa, const NavState& x_hat) {
  const ErrorState d = boxminus(x_kappa, x_hat);
  CovMatrix m = CovMatrix::Identity();
  for (int off : {idx::kRot, idx::kRotIL, idx::kRotIO}) {
    m.block<3, 3>(off, off) = a_matrix(d.segment<3>(off)).transpose().inverse();
  }
  return m;
}

namespace {

std::vector<int> active_indices(const IekfParams& p) {
  std::vector<int> active;
  for (int i = 0; i < kStateDim; ++i) {
    const bool lidar_ext = i >= idx::kRotIL && i < idx::kRotIO;
    const bool odom_ext = i >= idx::kRotIO;
    if ((lidar_ext && p.freeze_lidar_extrinsic) || (odom_ext && p.freeze_odom_extrinsic)) continue;
    active.push_back(i);
  }
  return active;
}

std::vector<LidarResidualRow> lidar_rows(std::span<const PlaneCorrespondence> corr, const NavState& x,
                                         std::vector<double>* var) {
  std::vector<LidarResidualRow> rows;
  rows.reserve(corr.size());
  if (var) var->clear();
  for (const PlaneCorrespondence& c : corr) {
    rows.push_back(residual_and_jacobian(c, x));
    if (var) var->push_back(c.noise_var);
  }
  return rows;
}

struct CostModel {
  const NavState& x_pred;
  const Eigen::MatrixXd& p_inv;  // active block
  const std::vector<int>& active;
  const std::optional<OdometryInput>& odom;

  double prior(const NavState& x) const {
    const ErrorState d = boxminus(x, x_pred);
    const Eigen::VectorXd da = d(active);
    return da.dot(p_inv * da);
  }

  double measurement(const NavState& x, std::span<const PlaneCorrespondence> corr, bool use_odom) const {
    double c = 0.0;
    for (const PlaneCorrespondence& pc : corr) {
      const double r = predict_plane_distance(pc, x);
      c += r * r / pc.noise_var;
    }
    if (use_odom) {
      const OdomResidual o = residual_and_jacobian(odom->meas, x, odom->x_prev);
      c += o.r_rot.dot(odom->meas.cov_rot.ldlt().solve(o.r_rot));
      c += o.r_pos.dot(odom->meas.cov_pos.ldlt().solve(o.r_pos));
    }
    return c;
  }
};

}  // namespace

UpdateResult iterated_update(const NavState& x_pred, const CovMatrix& p_pred, const LidarScan& scan,
                             const PointMap& map, const std::optional<OdometryInput>& odom,
                             const IekfParams& params) {
  UpdateResult res;
  res.state = x_pred;
  res.cov = p_pred;

  const std::vector<int> active = active_indices(params);
  const auto na = static_cast<Eigen::Index>(active.size());
  const Eigen::MatrixXd p_a = p_pred(active, active);
  Eigen::LLT<Eigen::MatrixXd> p_llt(p_a);
  if (p_llt.info() != Eigen::Success) {
    throw std::runtime_error("iterated_update: prior covariance is not positive definite on active states");
  }
  const Eigen::MatrixXd p_inv = p_llt.solve(Eigen::MatrixXd::Identity(na, na));
  const CostModel cost{x_pred, p_inv, active, odom};

  NavState x = x_pred;
  std::vector<PlaneCorrespondence> corr;
  NavState x_corr = x;  // state at which corr was searched
  bool have_decision = false;
  bool use_odom = false;
  Eigen::MatrixXd a_mat;  // posterior information at the last linearization
  Eigen::MatrixXd ptil;   // prior covariance in step coordinates, last linearization
  Eigen::MatrixXd info_a;

  for (int iter = 0; iter < params.max_iter; ++iter) {
    bool reused = false;
    if (iter > 0) {
      const ErrorState moved = boxminus(x, x_corr);
      reused = moved.segment<3>(idx::kPos).norm() < params.reuse_trans &&
               moved.segment<3>(idx::kRot).norm() < params.reuse_rot;
    }
    if (!reused) {
      corr = find_correspondences(scan, map, x, params.lidar);
      x_corr = x;
    }
    if (corr.empty()) break;

    std::vector<double> var;
    const std::vector<LidarResidualRow> rows = lidar_rows(corr, x, &var);
    if (!have_decision) {
      res.report = detect(pose_hessian(rows, var), params.thresholds);
      have_decision = true;
    }
    std::optional<OdomResidual> odom_res;
    std::optional<RelPoseMeasurement> odom_meas;
    if (odom) {
      odom_res = residual_and_jacobian(odom->meas, x, odom->x_prev);
      odom_meas = odom->meas;
    }
    const MeasurementStack stack = build_stack(rows, var, odom_res, odom_meas, res.report, params.mode);
    use_odom = stack.used_odometry;
    res.used_odometry = use_odom;
    res.odometry_fallback = res.report.degenerate && !odom && params.mode != FusionMode::kLidarOnly;
    res.n_points = corr.size();

    const CovMatrix m = m_matrix(x, x_pred);
    const Eigen::MatrixXd m_a = m(active, active);
    const ErrorState dx = boxminus(x, x_pred);
    const Eigen::VectorXd dx_a = dx(active);
    const CovMatrix info = stack.information();
    info_a = info(active, active);
    const Eigen::VectorXd b_a = stack.information_vector()(active);

    // Normal equations of the cost linearized at x.
    const Eigen::MatrixXd ptil_inv = m_a.transpose() * p_inv * m_a;
    a_mat = ptil_inv + info_a;
    const Eigen::MatrixXd minv_a = m_a.inverse();
    ptil = minv_a * p_a * minv_a.transpose();
    Eigen::LDLT<Eigen::MatrixXd> a_ldlt(a_mat);
    const Eigen::VectorXd step_a = a_ldlt.solve(b_a - m_a.transpose() * p_inv * dx_a);

    IterationTrace tr;
    tr.reused_correspondences = reused;
    tr.cost_before = cost.prior(x) + stack.weighted_sq_norm();

    ErrorState step = ErrorState::Zero();
    step(active) = step_a;
    // Backtrack if the full Gauss-Newton step increases the cost.
    double scale = 1.0;
    NavState candidate = boxplus(x, step);
    double cost_after = cost.prior(candidate) + cost.measurement(candidate, corr, use_odom);
    for (int k = 0; k < 8 && cost_after > tr.cost_before; ++k) {
      scale *= 0.5;
      candidate = boxplus(x, scale * step);
      cost_after = cost.prior(candidate) + cost.measurement(candidate, corr, use_odom);
    }
    ++res.iterations;
    if (cost_after > tr.cost_before) {
      // No descent available: x is a minimum to numerical precision.
      tr.cost_after = tr.cost_before;
      tr.step_norm = 0.0;
      res.trace.push_back(tr);
      res.final_cost = tr.cost_before;
      res.converged = true;
      break;
    }
    x = candidate;
    tr.cost_after = cost_after;
    tr.step_norm = scale * step_a.norm();
    res.trace.push_back(tr);
    res.final_cost = cost_after;
    if (tr.step_norm < params.step_tol) {
      res.converged = true;
      break;
    }
  }

  if (res.iterations == 0) {
    res.converged = false;
    return res;
  }

  Eigen::MatrixXd p_post;
  if (params.joseph_form) {
    const Eigen::MatrixXd a_inv = a_mat.inverse();
    const Eigen::MatrixXd ikh = Eigen::MatrixXd::Identity(na, na) - a_inv * info_a;
    p_post = ikh * ptil * ikh.transpose() + a_inv * info_a * a_inv;
  } else {
    // (I - K H) P~ with K = A^-1 H^T R^-1 equals A^-1.
    p_post = a_mat.inverse();
  }
  CovMatrix cov = CovMatrix::Zero();
  cov(active, active) = 0.5 * (p_post + p_post.transpose());
  res.state = x;
  res.cov = cov;
  return res;
}

}  // namespace gatedlio
