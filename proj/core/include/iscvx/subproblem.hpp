#pragma once

#include <string>
#include <vector>

#include "iscvx/coneqp.hpp"
#include "iscvx/linearize.hpp"

namespace iscvx {

/// The local convex model over stacked frame-coordinate perturbations:
/// per-step decision variables (xi_i, v_i^+, v_i^-, s'_i, eta_{i+1}) with
/// eta_0 fixed to zero and eliminated, plus one buffer for the keep-out row
/// at the final state. Dynamics rows are equalities with the split virtual
/// control absorbing infeasibility, the keep-out rows carry the virtual
/// buffers, and each control perturbation is bounded by the trust radius as
/// a second-order cone.
struct ConvexSubproblem {
  int n_steps = 0;
  double trust_radius = 0.0;
  std::vector<double> lambdas;
  double constant = 0.0;  // reference trajectory cost (sum of phi plus h)

  ConeQpProblem qp;

  // Cost blocks retained for evaluating the model cost at a solution.
  std::vector<Vec3> grad_q;  // index j = 1..N stored at j-1 (terminal last)
  std::vector<Mat3> hess_q;
  std::vector<Vec3> grad_w;  // index i = 0..N-1
  std::vector<Mat3> hess_w;

  int n_vars() const { return 13 * n_steps + 1; }
  int xi_index(int i) const { return 13 * i; }
  int v_plus_index(int i) const { return 13 * i + 3; }
  int v_minus_index(int i) const { return 13 * i + 6; }
  /// Buffer of the keep-out row at state i, i = 0..N.
  int s_buf_index(int i) const { return i < n_steps ? 13 * i + 9 : 13 * n_steps; }
  /// Variable index of eta_j for j = 1..N.
  int eta_index(int j) const { return 13 * (j - 1) + 10; }
};

/// Solution of the sub-problem in trajectory-shaped pieces. eta[0] is zero;
/// s_buf has one entry per state (N+1).
struct SubproblemSolution {
  std::vector<Vec3> eta;
  std::vector<Vec3> xi;
  std::vector<Vec3> v;
  std::vector<double> s_buf;
  double L_value = 0.0;
  ConeQpStats stats;
};

/// Builds the convex model from a trajectory linearization. Throws
/// std::invalid_argument on bad parameters and std::runtime_error when a
/// Hessian block fails positive semi-definiteness beyond 1e-9.
ConvexSubproblem assemble(const LinearizedTrajectory& lin, double trust_radius,
                          const std::vector<double>& lambdas);

/// Solves the assembled model; deterministic. Propagates ConeQpError on
/// solver failure. The reported L_value re-evaluates the model cost (with the
/// exact l1 penalty) at the extracted solution.
SubproblemSolution solve(const ConvexSubproblem& sp, const ConeQpOptions& opts = {});

/// Debug dump of the assembled program (dense matrices, row types) as JSON.
std::string dump_json(const ConvexSubproblem& sp);

}  // namespace iscvx
