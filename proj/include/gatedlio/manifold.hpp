#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace gatedlio {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rotation vector (axis * angle), radians.
using AxisAngle = Eigen::Vector3d;

/// Unit quaternion rotation. Re-normalized after every composition so long
/// runs do not accumulate drift off the unit sphere.
class Rotation {
 public:
  Rotation() : q_(Eigen::Quaterniond::Identity()) {}
  explicit Rotation(const Eigen::Quaterniond& q) : q_(q.normalized()) {}
  explicit Rotation(const Mat3& m) : q_(Eigen::Quaterniond(m).normalized()) {}

  /// Construct from (w, x, y, z) components.
  static Rotation from_wxyz(double w, double x, double y, double z) {
    return Rotation(Eigen::Quaterniond(w, x, y, z));
  }
  static Rotation identity() { return Rotation(); }

  const Eigen::Quaterniond& quaternion() const { return q_; }
  Mat3 matrix() const { return q_.toRotationMatrix(); }
  Rotation inverse() const { return Rotation(q_.conjugate()); }

  Vec3 operator*(const Vec3& v) const { return q_ * v; }
  Rotation operator*(const Rotation& other) const { return Rotation(q_ * other.q_); }

  double w() const { return q_.w(); }
  double x() const { return q_.x(); }
  double y() const { return q_.y(); }
  double z() const { return q_.z(); }

 private:
  Eigen::Quaterniond q_;
};

/// Cross-product matrix: skew(v) * w == v.cross(w).
Mat3 skew(const Vec3& v);

/// SO(3) exponential (Rodrigues). Below 1e-8 rad a second-order Taylor
/// expansion of the half-angle terms is used.
Rotation exp_so3(const AxisAngle& phi);

/// Principal SO(3) logarithm, |result| <= pi. At exactly pi the quaternion
/// sign is chosen so the largest-magnitude vector component is positive.
AxisAngle log_so3(const Rotation& r);

/// Left Jacobian of SO(3):
///   A(t) = I + (1 - cos|t|)/|t|^2 [t]x + (|t| - sin|t|)/|t|^3 [t]x^2
/// so that exp(t + d) ~= exp(A(t) d) * exp(t). A(t)^T is the right Jacobian,
/// hence d/dd log(exp(t) exp(d)) at d = 0 equals A(t)^-T.
Mat3 a_matrix(const AxisAngle& theta);

/// Right Jacobian of SO(3), equal to a_matrix(theta).transpose().
Mat3 right_jacobian(const AxisAngle& theta);

/// Spherical interpolation between two rotations, s in [0, 1] (extrapolates
/// along the same geodesic outside that range).
Rotation slerp(const Rotation& a, const Rotation& b, double s);

}  // namespace gatedlio
