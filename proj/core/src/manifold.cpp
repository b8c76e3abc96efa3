#include "iscvx/manifold.hpp"

#include <cmath>
#include <stdexcept>

namespace iscvx {

Quaternion retract_q(const Quaternion& q, const Vec3& coords) {
  return q * qexp(coords);
}

Vec3 inv_retract_q(const Quaternion& q, const Quaternion& p) {
  return qlog(inverse(q) * p);
}

Vec3 inv_retract_canonical(const Quaternion& q, const Quaternion& p) {
  return qlog(canonicalized(inverse(q) * p));
}

Vec3 frame_coords_q(const Quaternion& q, const Vec4& v_ambient) {
  const Vec4 qc = q.coeffs();
  const double ortho = std::abs(qc.dot(v_ambient));
  if (ortho > 1e-6 * std::max(1.0, v_ambient.norm()))
    throw std::domain_error("frame_coords_q: vector is not tangent at q");
  Vec3 coords;
  for (int i = 0; i < 3; ++i) {
    const Quaternion e = q * Quaternion::pure(Vec3::Unit(i));
    coords[i] = e.coeffs().dot(v_ambient);
  }
  return coords;
}

Vec4 frame_reconstruct_q(const Quaternion& q, const Vec3& coords) {
  return (q * Quaternion::pure(coords)).coeffs();
}

Eigen::VectorXd retract_euclidean(const Eigen::VectorXd& u, const Eigen::VectorXd& xi) {
  if (u.size() != xi.size())
    throw std::invalid_argument("retract_euclidean: length mismatch");
  return u + xi;
}

std::vector<Quaternion> product_retract(const std::vector<Quaternion>& points,
                                        const std::vector<TangentQ>& perturbations) {
  if (points.size() != perturbations.size())
    throw std::invalid_argument("product_retract: list length mismatch");
  std::vector<Quaternion> out;
  out.reserve(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    const Vec4 diff = points[i].coeffs() - perturbations[i].base.coeffs();
    if (diff.lpNorm<Eigen::Infinity>() > 1e-12)
      throw std::invalid_argument("product_retract: perturbation base point mismatch");
    out.push_back(retract_q(points[i], perturbations[i].coords));
  }
  return out;
}

std::vector<Vec3> product_retract(const std::vector<Vec3>& points,
                                  const std::vector<Vec3>& perturbations) {
  if (points.size() != perturbations.size())
    throw std::invalid_argument("product_retract: list length mismatch");
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (size_t i = 0; i < points.size(); ++i) out.push_back(points[i] + perturbations[i]);
  return out;
}

}  // namespace iscvx
