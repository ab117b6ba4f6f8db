#include "gatedlio/manifold.hpp"

#include <cmath>

namespace gatedlio {

namespace {
constexpr double kSmallAngle = 1e-8;
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Rotation exp_so3(const AxisAngle& phi) {
  const double theta = phi.norm();
  double w;
  double k;  // sin(theta/2) / theta
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    w = 1.0 - t2 / 8.0;
    k = 0.5 - t2 / 48.0;
  } else {
    w = std::cos(0.5 * theta);
    k = std::sin(0.5 * theta) / theta;
  }
  return Rotation(Eigen::Quaterniond(w, k * phi.x(), k * phi.y(), k * phi.z()));
}

AxisAngle log_so3(const Rotation& r) {
  Eigen::Quaterniond q = r.quaternion();
  if (q.w() < 0.0) {
    q.coeffs() = -q.coeffs();
  }
  Vec3 v = q.vec();
  if (q.w() == 0.0) {
    // theta == pi: q and -q both have w == 0, pick a consistent sign.
    Eigen::Index i;
    v.cwiseAbs().maxCoeff(&i);
    if (v[i] < 0.0) v = -v;
  }
  const double vn = v.norm();
  if (vn < kSmallAngle) {
    // theta ~= 2 vn / w; second-order correction in vn.
    const double w = q.w();
    return (2.0 / w) * (1.0 - vn * vn / (3.0 * w * w)) * v;
  }
  const double theta = 2.0 * std::atan2(vn, q.w());
  return (theta / vn) * v;
}

Mat3 a_matrix(const AxisAngle& theta) {
  const double t = theta.norm();
  const Mat3 k = skew(theta);
  if (t < kSmallAngle) {
    return Mat3::Identity() + 0.5 * k + (1.0 / 6.0) * k * k;
  }
  const double t2 = t * t;
  return Mat3::Identity() + (1.0 - std::cos(t)) / t2 * k +
         (t - std::sin(t)) / (t2 * t) * k * k;
}

Mat3 right_jacobian(const AxisAngle& theta) { return a_matrix(theta).transpose(); }

Rotation slerp(const Rotation& a, const Rotation& b, double s) {
  const AxisAngle d = log_so3(a.inverse() * b);
  return a * exp_so3(s * d);
}

}  // namespace gatedlio
