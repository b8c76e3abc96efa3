#include "iscvx/rng.hpp"

#include <cmath>

namespace iscvx {

double Xoshiro256pp::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  spare_ = mag * std::sin(2.0 * M_PI * u2);
  has_spare_ = true;
  return mag * std::cos(2.0 * M_PI * u2);
}

Vec3 Xoshiro256pp::unit_vec3() {
  Vec3 v;
  do {
    v = Vec3(gaussian(), gaussian(), gaussian());
  } while (v.norm() < 1e-12);
  return v.normalized();
}

Quaternion Xoshiro256pp::unit_quaternion() {
  Vec4 v;
  do {
    v = Vec4(gaussian(), gaussian(), gaussian(), gaussian());
  } while (v.norm() < 1e-12);
  v.normalize();
  return Quaternion::from_coeffs(v);
}

}  // namespace iscvx
