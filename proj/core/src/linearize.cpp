#include "iscvx/linearize.hpp"

#include <stdexcept>
#include <string>

namespace iscvx {

int LinearizedTrajectory::domain_warnings() const {
  int n = terminal_in_domain ? 0 : 1;
  for (const auto& s : steps) n += s.in_domain ? 0 : 1;
  return n;
}

Vec3 dyn_diff_state(const Quaternion& q, const Vec3& w, double tau, const Vec3& eta) {
  const Quaternion step = qexp(tau * w);
  const Quaternion q_next = q * step;
  const Quaternion d = (q * Quaternion::pure(eta)) * step;  // eta_ambient * exp(tau w)
  return frame_coords_q(q_next, d.coeffs());
}

Vec3 dyn_diff_control(const Quaternion& q, const Vec3& w, double tau, const Vec3& xi) {
  const Quaternion q_next = q * qexp(tau * w);
  const Vec4 v = dexp(tau * w, xi);
  const Quaternion d = q * Quaternion::from_coeffs(v);
  return frame_coords_q(q_next, tau * d.coeffs());
}

Vec3 curvature_op(const Quaternion& q_next_ref, const Quaternion& z, const Vec3& v_coords) {
  const Quaternion r = canonicalized(inverse(q_next_ref) * z);
  return dlog(r, (r * Quaternion::pure(v_coords)).coeffs());
}

namespace {

Mat3 materialize_state_map(const Quaternion& q, const Vec3& w, double tau) {
  Mat3 a;
  for (int j = 0; j < 3; ++j) a.col(j) = dyn_diff_state(q, w, tau, Vec3::Unit(j));
  return a;
}

Mat3 materialize_control_map(const Quaternion& q, const Vec3& w, double tau) {
  Mat3 b;
  for (int j = 0; j < 3; ++j) b.col(j) = dyn_diff_control(q, w, tau, Vec3::Unit(j));
  return b;
}

Mat3 materialize_curvature(const Quaternion& q_next_ref, const Quaternion& z) {
  Mat3 d;
  for (int j = 0; j < 3; ++j) d.col(j) = curvature_op(q_next_ref, z, Vec3::Unit(j));
  return d;
}

}  // namespace

LinearizedTrajectory linearize_trajectory(const Trajectory& traj,
                                          const AttitudeProblem& prob) {
  const int n = traj.n_steps();
  if (static_cast<int>(traj.states.size()) != n + 1)
    throw std::invalid_argument("linearize_trajectory: states/controls size mismatch");

  LinearizedTrajectory lin;
  lin.steps.resize(n);
  for (int i = 0; i < n; ++i) {
    try {
      const Quaternion& q = traj.states[i];
      const Vec3& w = traj.controls[i];
      const Quaternion& q_next = traj.states[i + 1];
      const Quaternion z = dynamics_step(q, w, prob.tau);

      LinearizedStep& st = lin.steps[i];
      const Mat3 d_op = materialize_curvature(q_next, z);
      st.A = d_op * materialize_state_map(q, w, prob.tau);
      st.B = d_op * materialize_control_map(q, w, prob.tau);
      st.defect = inv_retract_canonical(q_next, z);
      st.s_val = keepout_value(q, prob);
      for (int j = 0; j < 3; ++j) st.S_row[j] = keepout_diff(q, Vec3::Unit(j), prob);
      st.Q_row.setZero();

      const CostDerivatives cd = cost_derivatives(q, w, prob);
      st.phi = stage_cost(q, w, prob);
      st.grad_q = cd.grad_q;
      st.grad_w = cd.grad_w;
      st.hess_q = cd.hess_q;
      st.hess_w = cd.hess_w;
      st.in_domain = cd.in_domain;
    } catch (const std::domain_error& e) {
      throw std::domain_error("linearize_trajectory: step " + std::to_string(i) + ": " +
                              e.what());
    }
  }

  try {
    const CostDerivatives cd = cost_derivatives(traj.states[n], Vec3::Zero(), prob);
    lin.h_val = final_cost(traj.states[n], prob);
    lin.h_grad = cd.grad_q;
    lin.h_hess = cd.hess_q;
    lin.terminal_in_domain = cd.in_domain;
    lin.terminal_s_val = keepout_value(traj.states[n], prob);
    for (int j = 0; j < 3; ++j)
      lin.terminal_S_row[j] = keepout_diff(traj.states[n], Vec3::Unit(j), prob);
  } catch (const std::domain_error& e) {
    throw std::domain_error("linearize_trajectory: terminal state: " + std::string(e.what()));
  }
  return lin;
}

}  // namespace iscvx
