#pragma once

#include <vector>

#include "iscvx/quat.hpp"

namespace iscvx {

/// Tangent vector at a unit quaternion, stored as coordinates in the
/// orthonormal frame E_i(q) = q * e_i. The length-3 coordinates are the
/// working representation everywhere; ambient 4-vectors appear only at the
/// quaternion-calculus boundary.
struct TangentQ {
  Quaternion base;
  Vec3 coords = Vec3::Zero();
};

/// R_q(w) = q * exp(w). Unit for unit q; R_q(0) = q.
Quaternion retract_q(const Quaternion& q, const Vec3& coords);

/// Exact inverse of retract_q: log(q^-1 * p) in frame coordinates.
/// Throws std::domain_error when q^-1 * p is at the antipode.
Vec3 inv_retract_q(const Quaternion& q, const Quaternion& p);

/// Inverse retraction with the product sign-flipped onto the principal
/// branch; the form used for dynamics defects.
Vec3 inv_retract_canonical(const Quaternion& q, const Quaternion& p);

/// Coordinates of an ambient tangent 4-vector in the frame at q.
/// Throws std::domain_error when v is not tangent at q (|q . v| > 1e-6).
Vec3 frame_coords_q(const Quaternion& q, const Vec4& v_ambient);

/// Ambient 4-vector q * (0, coords) of frame coordinates at q.
Vec4 frame_reconstruct_q(const Quaternion& q, const Vec3& coords);

/// Vector-space retraction u + xi. Throws std::invalid_argument on length mismatch.
Eigen::VectorXd retract_euclidean(const Eigen::VectorXd& u, const Eigen::VectorXd& xi);

/// Element-wise retraction of a quaternion trajectory. Each perturbation must
/// be based at the corresponding point (std::invalid_argument otherwise).
std::vector<Quaternion> product_retract(const std::vector<Quaternion>& points,
                                        const std::vector<TangentQ>& perturbations);

/// Element-wise vector-space retraction.
std::vector<Vec3> product_retract(const std::vector<Vec3>& points,
                                  const std::vector<Vec3>& perturbations);

}  // namespace iscvx
