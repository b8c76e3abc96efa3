#pragma once

#include <memory>
#include <string>
#include <vector>

#include "iscvx/attitude.hpp"
#include "iscvx/coneqp.hpp"

namespace iscvx {

/// Trust-region loop parameters. Defaults follow the benchmark configuration:
/// shrink by alpha on poor model agreement, grow by beta on good agreement,
/// with the acceptance thresholds 0 <= rho0 < rho1 < rho2 < 1.
struct IscvxParams {
  double r1_init = 1.0;
  double r_min = 0.0;
  double alpha = 2.0;
  double beta = 3.2;
  double rho0 = 0.0;
  double rho1 = 0.25;
  double rho2 = 0.7;
  double lambda = 300.0;
  double eps_tol = 1e-5;
  int max_outer_iters = 500;
  bool record_iterates = false;
  ConeQpOptions subproblem;

  void validate() const;
};

enum class Termination {
  converged,          // an accepted step improved J by at most eps_tol
  zero_improvement,   // a candidate step left J exactly unchanged
  iteration_cap,      // max_outer_iters sub-problem solves exhausted
  trust_region_collapsed,
  solver_failure,
};

const char* termination_name(Termination t);

/// One sub-problem solve: the costs, the ratio test, and whether the step was
/// accepted. Rejected rows leave the trajectory untouched.
struct IterationRow {
  int k = 0;
  double j_current = 0.0;
  double l_model = 0.0;
  double delta_j = 0.0;
  double delta_l = 0.0;
  double rho = 0.0;
  double radius = 0.0;
  bool accepted = false;
};

struct SolveReport {
  Trajectory trajectory;
  int accepted_count = 0;
  int total_solves = 0;
  std::vector<IterationRow> log;
  double wall_time_ms = 0.0;
  Termination termination = Termination::iteration_cap;
  int domain_warning_count = 0;
  /// max |  |q| - 1  | over every state of the initial and accepted iterates.
  double max_manifold_drift = 0.0;
  std::string backend;
  std::vector<Trajectory> iterates;  // filled when record_iterates is set

  bool converged() const {
    return termination == Termination::converged ||
           termination == Termination::zero_improvement;
  }
};

/// True iff the improvement is within the termination tolerance.
inline bool check_termination(double delta_j, double eps_tol) {
  return delta_j <= eps_tol;
}

/// Penalized cost J: geodesic trajectory cost plus lambda times the l1 norm
/// of each dynamics defect (frame coordinates) and the rectified keep-out
/// value at each of the first N states.
double penalized_cost(const Trajectory& traj, const AttitudeProblem& prob, double lambda);

/// Runs the intrinsic trust-region loop from the given initial trajectory
/// (which must be on-manifold but need not be dynamically feasible).
SolveReport solve_iscvx(const AttitudeProblem& prob, const Trajectory& init,
                        const IscvxParams& params);

namespace detail {

/// Backend seam between the shared trust-region loop and the two
/// linearization schemes (intrinsic frame coordinates vs. ambient space).
class ScpBackend {
 public:
  virtual ~ScpBackend() = default;
  virtual std::string name() const = 0;
  virtual double penalized_cost(const Trajectory& traj) const = 0;
  /// Linearizes about the reference; subsequent solves reuse it.
  virtual void prepare(const Trajectory& reference) = 0;
  /// Solves the local model at the given radius, returning its optimal cost.
  virtual double solve_subproblem(double trust_radius) = 0;
  /// Applies the cached perturbation to the reference.
  virtual Trajectory apply_step(const Trajectory& reference) const = 0;
  /// Cost-domain warnings raised by the last prepare().
  virtual int domain_warnings() const { return 0; }
};

SolveReport run_trust_region_loop(ScpBackend& backend, const Trajectory& init,
                                  const IscvxParams& params);

}  // namespace detail

}  // namespace iscvx
