#pragma once

#include <vector>

#include "iscvx/driver.hpp"

namespace iscvx {

/// Ambient-space linearization data for the extrinsic baseline: states live
/// in R^4, so the step matrices and virtual controls carry one redundant
/// dimension per state.
struct EuclideanLinearizedStep {
  Mat4 A4 = Mat4::Identity();
  Mat43 B4 = Mat43::Zero();
  Eigen::RowVector4d S_row4 = Eigen::RowVector4d::Zero();
  double s_val = 0.0;
  Vec4 defect4 = Vec4::Zero();  // f(x_i, u_i) - x_{i+1}
  double phi = 0.0;
  Vec4 grad_q4 = Vec4::Zero();  // q_i - q_d; the state Hessian is I_4
  Vec3 grad_w = Vec3::Zero();
};

struct EuclideanLinearizedTrajectory {
  std::vector<EuclideanLinearizedStep> steps;
  double h_val = 0.0;
  Vec4 h_grad4 = Vec4::Zero();
  Eigen::RowVector4d terminal_S_row4 = Eigen::RowVector4d::Zero();
  double terminal_s_val = 0.0;

  int n_steps() const { return static_cast<int>(steps.size()); }
};

/// Linearizes dynamics, constraint, and the comparison cost in ambient
/// coordinates. States need not be unit; baseline iterates may drift off the
/// manifold and no projection is applied anywhere.
EuclideanLinearizedTrajectory euclidean_linearize(const Trajectory& traj,
                                                  const AttitudeProblem& prob);

/// Penalized cost for the baseline: the ambient quadratic trajectory cost
/// plus the same penalty, with virtual quantities measured through the
/// quaternion product q_{i+1}^-1 * v (four l1 components).
double euclidean_penalized_cost(const Trajectory& traj, const AttitudeProblem& prob,
                                double lambda);

/// Decision variable count of the baseline sub-problem (per step: xi, the two
/// virtual-control halves in R^4, the buffer, and eta_{i+1} in R^4; plus the
/// final-state keep-out buffer).
inline int scvx_subproblem_vars(int n_steps) { return 16 * n_steps + 1; }

/// Extrinsic trust-region solve sharing the driver loop of solve_iscvx.
SolveReport solve_scvx(const AttitudeProblem& prob, const Trajectory& init,
                       const IscvxParams& params);

}  // namespace iscvx
