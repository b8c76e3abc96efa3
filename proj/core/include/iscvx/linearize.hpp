#pragma once

#include <vector>

#include "iscvx/attitude.hpp"

namespace iscvx {

/// Per-timestep linearization data for the local convex model, everything in
/// frame coordinates (3-dimensional, never ambient).
///
/// A and B already include the inverse-retraction correction D, i.e. they are
/// the maps appearing in eta_{i+1} = defect + A eta_i + B xi_i. On a
/// dynamically feasible reference, defect = 0 and D = id.
struct LinearizedStep {
  Mat3 A = Mat3::Identity();
  Mat3 B = Mat3::Zero();
  Eigen::RowVector3d S_row = Eigen::RowVector3d::Zero();  // state constraint differential
  Eigen::RowVector3d Q_row = Eigen::RowVector3d::Zero();  // control constraint differential (zero here)
  double s_val = 0.0;                                     // constraint value at the reference
  Vec3 defect = Vec3::Zero();
  double phi = 0.0;  // stage cost at the reference
  Vec3 grad_q = Vec3::Zero();
  Vec3 grad_w = Vec3::Zero();
  Mat3 hess_q = Mat3::Identity();
  Mat3 hess_w = Mat3::Identity();
  bool in_domain = true;
};

/// Linearization of a whole trajectory: N steps plus the terminal cost and
/// constraint blocks (the keep-out holds at every state, the last included).
struct LinearizedTrajectory {
  std::vector<LinearizedStep> steps;
  double h_val = 0.0;  // terminal cost at the reference
  Vec3 h_grad = Vec3::Zero();
  Mat3 h_hess = Mat3::Identity();
  Eigen::RowVector3d terminal_S_row = Eigen::RowVector3d::Zero();
  double terminal_s_val = 0.0;
  bool terminal_in_domain = true;

  int n_steps() const { return static_cast<int>(steps.size()); }
  int domain_warnings() const;
};

/// State differential of the dynamics: frame coordinates at f(q, w) of
/// d_q f applied to the frame reconstruction of eta.
Vec3 dyn_diff_state(const Quaternion& q, const Vec3& w, double tau, const Vec3& eta);

/// Control differential: frame coordinates at f(q, w) of d_w f applied to xi.
Vec3 dyn_diff_control(const Quaternion& q, const Vec3& w, double tau, const Vec3& xi);

/// Differential of the inverse retraction p -> R^-1_{q_next}(p) at z, applied
/// to frame coordinates v at z; the identity map when z = q_next.
Vec3 curvature_op(const Quaternion& q_next_ref, const Quaternion& z, const Vec3& v_coords);

/// Full trajectory linearization about a reference; throws std::domain_error
/// annotated with the offending timestep on singularities.
LinearizedTrajectory linearize_trajectory(const Trajectory& traj, const AttitudeProblem& prob);

}  // namespace iscvx
