#include "gatedlio/state.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace gatedlio {

NavState boxplus(const NavState& x, const ErrorState& dx) {
  NavState out = x;
  out.rot_GI = x.rot_GI * exp_so3(dx.segment<3>(idx::kRot));
  out.pos_GI += dx.segment<3>(idx::kPos);
  out.vel_GI += dx.segment<3>(idx::kVel);
  out.bias_gyro += dx.segment<3>(idx::kBiasGyro);
  out.bias_acc += dx.segment<3>(idx::kBiasAcc);
  out.gravity += dx.segment<3>(idx::kGravity);
  out.rot_IL = x.rot_IL * exp_so3(dx.segment<3>(idx::kRotIL));
  out.pos_IL += dx.segment<3>(idx::kPosIL);
  out.rot_IO = x.rot_IO * exp_so3(dx.segment<3>(idx::kRotIO));
  out.pos_IO += dx.segment<3>(idx::kPosIO);
  return out;
}

ErrorState boxminus(const NavState& x1, const NavState& x2) {
  ErrorState d;
  d.segment<3>(idx::kRot) = log_so3(x2.rot_GI.inverse() * x1.rot_GI);
  d.segment<3>(idx::kPos) = x1.pos_GI - x2.pos_GI;
  d.segment<3>(idx::kVel) = x1.vel_GI - x2.vel_GI;
  d.segment<3>(idx::kBiasGyro) = x1.bias_gyro - x2.bias_gyro;
  d.segment<3>(idx::kBiasAcc) = x1.bias_acc - x2.bias_acc;
  d.segment<3>(idx::kGravity) = x1.gravity - x2.gravity;
  d.segment<3>(idx::kRotIL) = log_so3(x2.rot_IL.inverse() * x1.rot_IL);
  d.segment<3>(idx::kPosIL) = x1.pos_IL - x2.pos_IL;
  d.segment<3>(idx::kRotIO) = log_so3(x2.rot_IO.inverse() * x1.rot_IO);
  d.segment<3>(idx::kPosIO) = x1.pos_IO - x2.pos_IO;
  return d;
}

CovMatrix symmetrized(const CovMatrix& p) { return 0.5 * (p + p.transpose()); }

bool is_valid_covariance(const CovMatrix& p, double sym_rtol, double psd_rtol) {
  if (!p.allFinite()) return false;
  const double scale = std::max(p.cwiseAbs().maxCoeff(), 1e-300);
  if ((p - p.transpose()).cwiseAbs().maxCoeff() > sym_rtol * scale) return false;
  Eigen::SelfAdjointEigenSolver<CovMatrix> es(symmetrized(p), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -psd_rtol * std::abs(p.trace());
}

std::string state_csv_header() {
  return "t,qw,qx,qy,qz,px,py,pz,vx,vy,vz,bgx,bgy,bgz,bax,bay,baz,gx,gy,gz,"
         "qw_il,qx_il,qy_il,qz_il,px_il,py_il,pz_il,"
         "qw_io,qx_io,qy_io,qz_io,px_io,py_io,pz_io";
}

namespace {
void put(std::ostringstream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), ",%.17g", v);
  os << buf;
}
void put_rot(std::ostringstream& os, const Rotation& r) {
  put(os, r.w());
  put(os, r.x());
  put(os, r.y());
  put(os, r.z());
}
void put_vec(std::ostringstream& os, const Vec3& v) {
  put(os, v.x());
  put(os, v.y());
  put(os, v.z());
}
}  // namespace

std::string state_to_csv_row(double t, const NavState& x) {
  std::ostringstream os;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9f", t);
  os << buf;
  put_rot(os, x.rot_GI);
  put_vec(os, x.pos_GI);
  put_vec(os, x.vel_GI);
  put_vec(os, x.bias_gyro);
  put_vec(os, x.bias_acc);
  put_vec(os, x.gravity);
  put_rot(os, x.rot_IL);
  put_vec(os, x.pos_IL);
  put_rot(os, x.rot_IO);
  put_vec(os, x.pos_IO);
  return os.str();
}

NavState state_from_csv_row(const std::string& row, double* t) {
  std::vector<double> v;
  std::stringstream ss(row);
  std::string field;
  while (std::getline(ss, field, ',')) {
    try {
      v.push_back(std::stod(field));
    } catch (const std::exception&) {
      throw std::invalid_argument("state row: bad number '" + field + "'");
    }
  }
  if (v.size() != 34) {
    throw std::invalid_argument("state row: expected 34 fields, got " + std::to_string(v.size()));
  }
  NavState x;
  std::size_t i = 1;
  auto rot = [&] {
    Rotation r = Rotation::from_wxyz(v[i], v[i + 1], v[i + 2], v[i + 3]);
    i += 4;
    return r;
  };
  auto vec = [&] {
    Vec3 r(v[i], v[i + 1], v[i + 2]);
    i += 3;
    return r;
  };
  x.rot_GI = rot();
  x.pos_GI = vec();
  x.vel_GI = vec();
  x.bias_gyro = vec();
  x.bias_acc = vec();
  x.gravity = vec();
  x.rot_IL = rot();
  x.pos_IL = vec();
  x.rot_IO = rot();
  x.pos_IO = vec();
  if (t) *t = v[0];
  return x;
}

}  // namespace gatedlio
