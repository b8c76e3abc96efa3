#include "iscvx/quat.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>

namespace iscvx {

namespace {

// Below this norm the closed-form expressions divide small by small; a
// 4th-order Taylor branch keeps full accuracy through the crossover.
constexpr double kSeriesTol = 1e-4;
constexpr double kAntipodeTol = 1e-9;
constexpr double kUnitTol = 1e-9;

}  // namespace

double Quaternion::norm() const { return std::sqrt(squared_norm()); }

bool Quaternion::is_unit(double tol) const {
  return std::abs(norm() - 1.0) <= tol;
}

Quaternion operator*(const Quaternion& p, const Quaternion& q) {
  return {p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
          p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
          p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
          p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w};
}

Quaternion inverse(const Quaternion& q) {
  const double n2 = q.squared_norm();
  if (n2 == 0.0) throw std::domain_error("quaternion inverse of zero");
  const double s = 1.0 / n2;
  return {q.w * s, -q.x * s, -q.y * s, -q.z * s};
}

Vec3 rotate(const Quaternion& q, const Vec3& y) {
  if (!q.is_unit(kUnitTol)) throw std::domain_error("rotate: quaternion is not unit");
  const Vec3 qv = q.vec();
  const Vec3 t = 2.0 * qv.cross(y);
  return y + q.w * t + qv.cross(t);
}

Quaternion qexp(const Vec3& w) {
  const double theta = w.norm();
  const double t = theta * theta;
  double s;  // sinc(theta)
  if (theta < kSeriesTol) {
    s = 1.0 - t / 6.0 + t * t / 120.0;
  } else {
    s = std::sin(theta) / theta;
  }
  return {std::cos(theta), s * w.x(), s * w.y(), s * w.z()};
}

Vec3 qlog(const Quaternion& q) {
  if (q.w <= -1.0 + kAntipodeTol)
    throw std::domain_error("qlog: quaternion at the antipode");
  const Vec3 qv = q.vec();
  const double s = qv.norm();
  double factor;  // acos(q0)/|q_v|
  if (s < kSeriesTol && q.w > 0.0) {
    const double t = s * s;
    factor = 1.0 + t / 6.0 + 3.0 * t * t / 40.0;  // asin(s)/s
  } else {
    factor = std::atan2(s, q.w) / s;
  }
  return factor * qv;
}

std::pair<double, Vec3> sinc_and_grad(const Vec3& w) {
  const double theta = w.norm();
  const double t = theta * theta;
  double s, g;  // sinc and the radial factor of its gradient
  if (theta < kSeriesTol) {
    s = 1.0 - t / 6.0 + t * t / 120.0;
    g = -1.0 / 3.0 + t / 30.0 - t * t / 840.0;
  } else {
    s = std::sin(theta) / theta;
    g = (std::cos(theta) - s) / t;  // cos/t^2 - sin/t^3, with t = theta^2
  }
  return {s, g * w};
}

Vec4 dexp(const Vec3& w, const Vec3& eta) {
  const auto [s, grad] = sinc_and_grad(w);
  const double wd = w.dot(eta);
  Vec4 out;
  out[0] = -s * wd;
  out.tail<3>() = s * eta + grad * wd;
  return out;
}

Mat43 dexp_matrix(const Vec3& w) {
  const auto [s, grad] = sinc_and_grad(w);
  Mat43 m;
  m.row(0) = -s * w.transpose();
  m.bottomRows<3>() = s * Mat3::Identity() + grad * w.transpose();
  return m;
}

Vec3 dlog(const Quaternion& q, const Vec4& v) {
  if (q.w <= -1.0 + kAntipodeTol)
    throw std::domain_error("dlog: quaternion at the antipode");
  const Vec3 qv = q.vec();
  const double s = qv.norm();
  const double v0 = v[0];
  const Vec3 vv = v.tail<3>();

  if (s < kSeriesTol && std::abs(q.w) > 0.5) {
    // Near +-identity the matrix form divides by |q_v|^2; restricted to
    // tangent vectors (q^T v = 0, so v0 = -q_v.vv / q0) it reduces to a
    // stable expression in the unit axis.
    const double t = s * s;
    const double a = (q.w > 0.0) ? 1.0 + t / 6.0 + 3.0 * t * t / 40.0  // asin(s)/s
                                 : (M_PI - std::asin(s)) / s;
    if (s == 0.0) return a * vv;
    const Vec3 axis = qv / s;
    const double radial = axis.dot(vv);
    return (radial / q.w) * axis + a * (vv - radial * axis);
  }

  // Direct form; for unit q, sqrt(1 - q0^2) = |q_v|.
  const double theta = std::atan2(s, q.w);
  const Vec3 axis = qv / s;
  return -(v0 / (s * s)) * qv + (theta / s) * (vv - axis * axis.dot(vv));
}

Mat3 dlog_frame(const Quaternion& r) {
  Mat3 m;
  for (int j = 0; j < 3; ++j) {
    const Quaternion col = r * Quaternion::pure(Vec3::Unit(j));
    m.col(j) = dlog(r, col.coeffs());
  }
  return m;
}

Mat3 rotation_matrix(const Quaternion& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Mat4 left_product_matrix(const Quaternion& q) {
  Mat4 m;
  m << q.w, -q.x, -q.y, -q.z,
      q.x, q.w, -q.z, q.y,
      q.y, q.z, q.w, -q.x,
      q.z, -q.y, q.x, q.w;
  return m;
}

Mat4 right_product_matrix(const Quaternion& p) {
  Mat4 m;
  m << p.w, -p.x, -p.y, -p.z,
      p.x, p.w, p.z, -p.y,
      p.y, -p.z, p.w, p.x,
      p.z, p.y, -p.x, p.w;
  return m;
}

}  // namespace iscvx
