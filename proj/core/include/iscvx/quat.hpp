#pragma once

#include <Eigen/Core>

#include <utility>

namespace iscvx {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat43 = Eigen::Matrix<double, 4, 3>;

/// Rotation quaternion, scalar-first layout (w, x, y, z).
/// Unit norm is required wherever a Quaternion is used as a point of the
/// rotation group; intermediates (products, tangent 4-vectors) may be general.
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quaternion identity() { return {1.0, 0.0, 0.0, 0.0}; }

  /// Embeds a 3-vector as a pure quaternion (0, v).
  static Quaternion pure(const Vec3& v) { return {0.0, v.x(), v.y(), v.z()}; }

  static Quaternion from_coeffs(const Vec4& c) { return {c[0], c[1], c[2], c[3]}; }

  Vec3 vec() const { return Vec3(x, y, z); }
  Vec4 coeffs() const { return Vec4(w, x, y, z); }

  double squared_norm() const { return w * w + x * x + y * y + z * z; }
  double norm() const;
  bool is_unit(double tol = 1e-9) const;

  Quaternion conjugate() const { return {w, -x, -y, -z}; }
};

/// Hamilton product p * q.
Quaternion operator*(const Quaternion& p, const Quaternion& q);

inline Quaternion operator-(const Quaternion& q) { return {-q.w, -q.x, -q.y, -q.z}; }

/// Multiplicative inverse conj(q) / |q|^2. Throws std::domain_error for q = 0.
Quaternion inverse(const Quaternion& q);

/// Same rotation, nonnegative scalar part.
inline Quaternion canonicalized(const Quaternion& q) { return q.w < 0.0 ? -q : q; }

/// Rotates y by the rotation q, i.e. the pure part of q * (0, y) * q^-1.
/// q must be unit within 1e-9.
Vec3 rotate(const Quaternion& q, const Vec3& y);

/// Quaternion exponential exp(w) = (cos|w|, sinc(w) w). Always unit.
Quaternion qexp(const Vec3& w);

/// Quaternion logarithm (acos(q0)/|q_v|) q_v for unit q.
/// Throws std::domain_error at the antipode (q0 <= -1 + 1e-9).
Vec3 qlog(const Quaternion& q);

/// sinc(w) = sin|w|/|w| and its gradient, continuous at w = 0.
std::pair<double, Vec3> sinc_and_grad(const Vec3& w);

/// Differential of qexp at w applied to eta; a tangent 4-vector at qexp(w).
Vec4 dexp(const Vec3& w, const Vec3& eta);

/// dexp materialized as the 4x3 matrix [-sinc(w) w^T; sinc(w) I + grad_sinc(w) w^T].
Mat43 dexp_matrix(const Vec3& w);

/// Differential of qlog at unit q applied to a tangent 4-vector v.
/// Throws std::domain_error at the antipode.
Vec3 dlog(const Quaternion& q, const Vec4& v);

/// The 3x3 matrix of c -> dlog_r(r * (0, c)), the left-trivialized
/// differential of qlog at r. Identity at r = identity.
Mat3 dlog_frame(const Quaternion& r);

/// 3x3 rotation matrix of a unit quaternion (R(q) v = rotate(q, v)).
Mat3 rotation_matrix(const Quaternion& q);

/// 4x4 matrix L(q) with L(q) p = q * p, acting on scalar-first coefficients.
Mat4 left_product_matrix(const Quaternion& q);

/// 4x4 matrix R(p) with R(p) q = q * p.
Mat4 right_product_matrix(const Quaternion& p);

}  // namespace iscvx
