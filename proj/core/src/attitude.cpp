#include "iscvx/attitude.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>

namespace iscvx {

AttitudeProblem::AttitudeProblem(const Quaternion& q0_in, const Quaternion& qd_in,
                                 const Vec3& y_b_in, const Vec3& t_o_in,
                                 double theta_max_rad, int n_steps_in, double tau_in)
    : q0(q0_in),
      qd(qd_in),
      y_b(y_b_in),
      t_o(t_o_in),
      theta_max(theta_max_rad),
      n_steps(n_steps_in),
      tau(tau_in) {
  if (std::abs(y_b.norm() - 1.0) > 1e-12 || std::abs(t_o.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("AttitudeProblem: y_b and t_o must be unit vectors");
  if (!(theta_max > 0.0 && theta_max < M_PI / 2.0))
    throw std::invalid_argument("AttitudeProblem: theta_max must lie in (0, pi/2)");
  if (n_steps < 2) throw std::invalid_argument("AttitudeProblem: n_steps must be >= 2");
  if (!(tau > 0.0)) throw std::invalid_argument("AttitudeProblem: tau must be positive");
  if (!q0.is_unit() || !qd.is_unit())
    throw std::invalid_argument("AttitudeProblem: q0 and qd must be unit quaternions");
  // Flip qd so that q0^-1 * qd has nonnegative scalar part; for unit
  // quaternions that scalar part equals the 4-vector dot product.
  if (q0.coeffs().dot(qd.coeffs()) < 0.0) qd = -qd;
}

Quaternion dynamics_step(const Quaternion& q, const Vec3& w, double tau) {
  return q * qexp(tau * w);
}

double keepout_value(const Quaternion& q, const AttitudeProblem& prob) {
  return prob.t_o.dot(rotate(q, prob.y_b)) - std::cos(prob.theta_max);
}

double keepout_diff(const Quaternion& q, const Vec3& eta, const AttitudeProblem& prob) {
  // t_o . (q [ (0,eta), (0,y_b) ] q^-1) with [a,b] = ab - ba; the commutator
  // of pure quaternions is (0, 2 eta x y_b).
  return prob.t_o.dot(rotate(q, 2.0 * eta.cross(prob.y_b)));
}

double geo_dist_sq(const Quaternion& q, const Quaternion& qd) {
  const Vec3 w = qlog(canonicalized(inverse(q) * qd));
  return w.squaredNorm();
}

double stage_cost(const Quaternion& q, const Vec3& w, const AttitudeProblem& prob) {
  return 0.5 * w.squaredNorm() + 0.5 * geo_dist_sq(q, prob.qd);
}

double final_cost(const Quaternion& q, const AttitudeProblem& prob) {
  return 0.5 * geo_dist_sq(q, prob.qd);
}

double trajectory_cost(const Trajectory& traj, const AttitudeProblem& prob) {
  const int n = traj.n_steps();
  double c = 0.0;
  for (int i = 0; i < n; ++i) c += stage_cost(traj.states[i], traj.controls[i], prob);
  return c + final_cost(traj.states[n], prob);
}

double euclidean_trajectory_cost(const Trajectory& traj, const AttitudeProblem& prob) {
  const Vec4 qd = prob.qd.coeffs();
  const int n = traj.n_steps();
  double c = 0.0;
  for (int i = 0; i < n; ++i) {
    c += 0.5 * (traj.states[i].coeffs() - qd).squaredNorm();
    c += 0.5 * traj.controls[i].squaredNorm();
  }
  return c + 0.5 * (traj.states[n].coeffs() - qd).squaredNorm();
}

CostDerivatives cost_derivatives(const Quaternion& q, const Vec3& w,
                                 const AttitudeProblem& prob) {
  CostDerivatives d;
  const Quaternion r = canonicalized(inverse(prob.qd) * q);
  d.grad_q = qlog(r);
  // dlog_frame(r) is the frame derivative of the gradient field; it carries
  // the connection term of the left-invariant frame, so the geodesic Hessian
  // is its symmetric part.
  const Mat3 m = dlog_frame(r);
  d.hess_q = 0.5 * (m + m.transpose());
  d.grad_w = w;
  d.hess_w = Mat3::Identity();
  d.in_domain = r.w > 1e-12;
  return d;
}

Trajectory slerp_init(const AttitudeProblem& prob) {
  const Vec3 w_total = qlog(canonicalized(inverse(prob.q0) * prob.qd));
  const int n = prob.n_steps;
  Trajectory traj;
  traj.states.reserve(n + 1);
  traj.controls.assign(n, w_total / (n * prob.tau));
  for (int i = 0; i <= n; ++i)
    traj.states.push_back(prob.q0 * qexp((static_cast<double>(i) / n) * w_total));
  return traj;
}

}  // namespace iscvx
