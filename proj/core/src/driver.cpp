#include "iscvx/driver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "iscvx/linearize.hpp"
#include "iscvx/subproblem.hpp"

namespace iscvx {

void IscvxParams::validate() const {
  if (!(r1_init > 0.0)) throw std::invalid_argument("params: r1_init must be positive");
  if (r_min < 0.0) throw std::invalid_argument("params: r_min must be nonnegative");
  if (!(alpha > 1.0) || !(beta > 1.0))
    throw std::invalid_argument("params: alpha and beta must exceed 1");
  if (!(0.0 <= rho0 && rho0 < rho1 && rho1 < rho2 && rho2 < 1.0))
    throw std::invalid_argument("params: need 0 <= rho0 < rho1 < rho2 < 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("params: lambda must be positive");
  if (!(eps_tol > 0.0)) throw std::invalid_argument("params: eps_tol must be positive");
  if (max_outer_iters < 1) throw std::invalid_argument("params: max_outer_iters must be >= 1");
}

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::zero_improvement: return "zero_improvement";
    case Termination::iteration_cap: return "iteration_cap";
    case Termination::trust_region_collapsed: return "trust_region_collapsed";
    case Termination::solver_failure: return "solver_failure";
  }
  return "unknown";
}

double penalized_cost(const Trajectory& traj, const AttitudeProblem& prob, double lambda) {
  const int n = traj.n_steps();
  double j = trajectory_cost(traj, prob);
  for (int i = 0; i < n; ++i) {
    const Quaternion z = dynamics_step(traj.states[i], traj.controls[i], prob.tau);
    const Vec3 defect = inv_retract_canonical(traj.states[i + 1], z);
    j += lambda * (defect.lpNorm<1>() +
                   std::max(0.0, keepout_value(traj.states[i], prob)));
  }
  j += lambda * std::max(0.0, keepout_value(traj.states[n], prob));
  return j;
}

namespace detail {

namespace {

double manifold_drift(const Trajectory& traj) {
  double d = 0.0;
  for (const auto& q : traj.states) d = std::max(d, std::abs(q.norm() - 1.0));
  return d;
}

constexpr double kRadiusFloor = 1e-12;

}  // namespace

SolveReport run_trust_region_loop(ScpBackend& backend, const Trajectory& init,
                                  const IscvxParams& params) {
  params.validate();
  const auto t0 = std::chrono::steady_clock::now();

  SolveReport report;
  report.backend = backend.name();
  report.trajectory = init;
  report.max_manifold_drift = manifold_drift(init);
  if (params.record_iterates) report.iterates.push_back(init);

  Trajectory traj = init;
  double j_current = backend.penalized_cost(traj);
  double radius = params.r1_init;
  report.termination = Termination::iteration_cap;

  while (report.total_solves < params.max_outer_iters) {
    backend.prepare(traj);

    double l_model = 0.0;
    try {
      l_model = backend.solve_subproblem(radius);
    } catch (const ConeQpError&) {
      // Shrink and retry; a smaller radius usually restores solvability.
      radius /= params.alpha;
      ++report.total_solves;
      if (radius < kRadiusFloor) {
        report.termination = Termination::solver_failure;
        break;
      }
      continue;
    }
    ++report.total_solves;

    const Trajectory candidate = backend.apply_step(traj);
    const double j_candidate = backend.penalized_cost(candidate);
    const double delta_j = j_current - j_candidate;
    const double delta_l = j_current - l_model;

    IterationRow row;
    row.k = report.total_solves;
    row.j_current = j_current;
    row.l_model = l_model;
    row.delta_j = delta_j;
    row.delta_l = delta_l;
    row.radius = radius;

    // "exactly zero improvement" read at rounding precision of J
    if (std::abs(delta_j) <= 1e-14 * std::max(1.0, std::abs(j_current))) {
      row.rho = 0.0;
      report.log.push_back(row);
      report.termination = Termination::zero_improvement;
      break;
    }

    // The model minimizer can never exceed J (the zero step attains it), so
    // delta_l <= 0 only arises from solver noise; treat it as a poor step.
    const bool model_valid = delta_l > 0.0;
    const double rho = model_valid ? delta_j / delta_l
                                   : -std::numeric_limits<double>::infinity();
    row.rho = rho;
    row.accepted = model_valid && rho >= params.rho0;
    report.log.push_back(row);

    if (!row.accepted) {
      radius /= params.alpha;
      if (radius < kRadiusFloor) {
        report.termination = Termination::trust_region_collapsed;
        break;
      }
      continue;
    }

    traj = candidate;
    j_current = j_candidate;
    ++report.accepted_count;
    report.domain_warning_count += backend.domain_warnings();
    report.max_manifold_drift = std::max(report.max_manifold_drift, manifold_drift(traj));
    if (params.record_iterates) report.iterates.push_back(traj);

    if (rho < params.rho1)
      radius /= params.alpha;
    else if (rho >= params.rho2)
      radius *= params.beta;
    radius = std::max(radius, params.r_min);

    if (check_termination(delta_j, params.eps_tol)) {
      report.termination = Termination::converged;
      break;
    }
  }

  report.trajectory = traj;
  report.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

}  // namespace detail

namespace {

class IntrinsicBackend final : public detail::ScpBackend {
 public:
  IntrinsicBackend(const AttitudeProblem& prob, const IscvxParams& params)
      : prob_(prob), params_(params) {}

  std::string name() const override { return "iscvx"; }

  double penalized_cost(const Trajectory& traj) const override {
    return iscvx::penalized_cost(traj, prob_, params_.lambda);
  }

  void prepare(const Trajectory& reference) override {
    lin_ = linearize_trajectory(reference, prob_);
    warnings_ = lin_.domain_warnings();
  }

  double solve_subproblem(double trust_radius) override {
    const std::vector<double> lambdas(lin_.n_steps(), params_.lambda);
    const ConvexSubproblem sp = assemble(lin_, trust_radius, lambdas);
    sol_ = solve(sp, params_.subproblem);
    return sol_.L_value;
  }

  Trajectory apply_step(const Trajectory& reference) const override {
    const int n = reference.n_steps();
    Trajectory out;
    out.states.reserve(n + 1);
    std::vector<TangentQ> perts(n + 1);
    for (int i = 0; i <= n; ++i) perts[i] = {reference.states[i], sol_.eta[i]};
    out.states = product_retract(reference.states, perts);
    out.controls = product_retract(reference.controls, sol_.xi);
    return out;
  }

  int domain_warnings() const override { return warnings_; }

 private:
  const AttitudeProblem& prob_;
  const IscvxParams& params_;
  LinearizedTrajectory lin_;
  SubproblemSolution sol_;
  int warnings_ = 0;
};

}  // namespace

SolveReport solve_iscvx(const AttitudeProblem& prob, const Trajectory& init,
                        const IscvxParams& params) {
  if (static_cast<int>(init.states.size()) != prob.n_steps + 1 ||
      init.n_steps() != prob.n_steps)
    throw std::invalid_argument("solve_iscvx: initial trajectory size mismatch");
  for (const auto& q : init.states)
    if (!q.is_unit()) throw std::invalid_argument("solve_iscvx: initial states must be unit");
  IntrinsicBackend backend(prob, params);
  return detail::run_trust_region_loop(backend, init, params);
}

}  // namespace iscvx
