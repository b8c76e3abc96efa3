#pragma once

#include <vector>

#include "iscvx/manifold.hpp"
#include "iscvx/quat.hpp"

namespace iscvx {

/// Constrained attitude guidance problem: steer from q0 toward qd under the
/// rotation kinematics q_{i+1} = q_i * exp(tau w_i) while keeping the rotated
/// boresight y_b at least theta_max away from the inertial direction t_o.
///
/// The constructor sign-canonicalizes (q0, qd) so that q0^-1 * qd has
/// nonnegative scalar part, keeping all logarithms on the principal branch.
struct AttitudeProblem {
  Quaternion q0;
  Quaternion qd;
  Vec3 y_b{0.0, 0.0, 1.0};
  Vec3 t_o{1.0, 0.0, 0.0};
  double theta_max = 0.0;  // radians, in (0, pi/2)
  int n_steps = 0;         // N >= 2
  double tau = 0.0;        // seconds, > 0

  AttitudeProblem(const Quaternion& q0_in, const Quaternion& qd_in, const Vec3& y_b_in,
                  const Vec3& t_o_in, double theta_max_rad, int n_steps_in, double tau_in);
};

/// Discrete state/control trajectory: N+1 states, N angular-velocity controls.
struct Trajectory {
  std::vector<Quaternion> states;
  std::vector<Vec3> controls;

  int n_steps() const { return static_cast<int>(controls.size()); }
};

/// One step of the rotation kinematics, q * exp(tau w).
Quaternion dynamics_step(const Quaternion& q, const Vec3& w, double tau);

/// Keep-out constraint value s(q) = t_o . rotate(q, y_b) - cos(theta_max);
/// s(q) <= 0 iff the boresight is at least theta_max away from t_o.
double keepout_value(const Quaternion& q, const AttitudeProblem& prob);

/// Directional derivative of keepout_value along frame coordinates eta at q.
double keepout_diff(const Quaternion& q, const Vec3& eta, const AttitudeProblem& prob);

/// Squared geodesic distance |log(q^-1 qd)|^2 on the principal branch;
/// zero iff q and qd represent the same rotation.
double geo_dist_sq(const Quaternion& q, const Quaternion& qd);

/// Stage cost 0.5 |w|^2 + 0.5 d_g(q, qd)^2.
double stage_cost(const Quaternion& q, const Vec3& w, const AttitudeProblem& prob);

/// Terminal cost 0.5 d_g(q, qd)^2.
double final_cost(const Quaternion& q, const AttitudeProblem& prob);

/// Geodesic trajectory cost: sum of stage costs plus terminal cost.
double trajectory_cost(const Trajectory& traj, const AttitudeProblem& prob);

/// The comparison cost 0.5 sum(|q_i - qd|^2 + |w_i|^2) + 0.5 |q_N - qd|^2,
/// defined for arbitrary (possibly non-unit) states.
double euclidean_trajectory_cost(const Trajectory& traj, const AttitudeProblem& prob);

/// Riemannian derivatives of the stage costs in frame coordinates at (q, w).
/// hess_q is the symmetric positive semi-definite geodesic Hessian; in_domain
/// is false when d_g(q, qd) has reached pi/2, where convexity degenerates.
struct CostDerivatives {
  Vec3 grad_q = Vec3::Zero();
  Mat3 hess_q = Mat3::Identity();
  Vec3 grad_w = Vec3::Zero();
  Mat3 hess_w = Mat3::Identity();
  bool in_domain = true;
};

CostDerivatives cost_derivatives(const Quaternion& q, const Vec3& w,
                                 const AttitudeProblem& prob);

/// Spherical-linear-interpolation initial trajectory from q0 to qd with the
/// constant control realizing it; dynamically feasible by construction.
Trajectory slerp_init(const AttitudeProblem& prob);

}  // namespace iscvx
