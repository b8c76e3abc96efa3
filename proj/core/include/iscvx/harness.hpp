#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iscvx/driver.hpp"
#include "iscvx/rng.hpp"
#include "iscvx/scvx.hpp"

namespace iscvx {

enum class Algorithm { iscvx, scvx, both };

Algorithm algorithm_from_string(const std::string& s);
const char* algorithm_name(Algorithm a);

/// Experiment configuration; field names mirror the CLI flags.
struct ExperimentConfig {
  int n_steps = 30;
  double tau = 0.1;
  double theta_max_deg = 10.0;
  int trials = 100;
  uint64_t seed = 0;
  Algorithm algorithm = Algorithm::both;
  IscvxParams params;
  std::string out_dir = ".";
  int jobs = 1;

  // Optional fixed problem data (config file only); sampled from the seed
  // when absent.
  std::optional<Quaternion> q0;
  std::optional<Quaternion> qd;
  std::optional<Vec3> t_o;
  Vec3 y_b{0.0, 0.0, 1.0};
};

/// One randomized solve. Wall time is reported in the timing export and the
/// console summary, never in the metrics CSV, so CSV outputs stay
/// byte-identical across reruns of the same seed.
struct TrialMetrics {
  std::string algorithm;
  int trial = 0;
  uint64_t seed = 0;
  int iterations = 0;  // sub-problem solves, rejected steps included
  int accepted = 0;
  bool converged = false;
  double geodesic_cost = 0.0;
  double euclidean_cost = 0.0;
  double max_keepout_violation = 0.0;
  double max_manifold_drift = 0.0;
  double wall_ms = 0.0;
};

extern const char* const kMetricsCsvHeader;
extern const char* const kIterationCsvHeader;

/// Draws (q0, qd, t_o) for one trial: attitudes uniform on the unit sphere in
/// R^4 (normalized Gaussians), t_o uniform on S^2 but resampled until the
/// endpoint attitudes clear the cone with margin and the interpolated path
/// approaches it, so that the constraint matters in a nontrivial fraction of
/// trials.
AttitudeProblem sample_problem(const ExperimentConfig& cfg, uint64_t trial_seed);

/// Per-trial seeds derived from the master seed with splitmix64.
std::vector<uint64_t> trial_seeds(uint64_t master_seed, int trials);

/// Geodesic trajectory cost evaluated on normalized copies of the states
/// (baseline iterates may be off-manifold; they are left untouched).
double geodesic_cost_metric(const Trajectory& traj, const AttitudeProblem& prob);

TrialMetrics metrics_from_report(const SolveReport& report, const AttitudeProblem& prob,
                                 int trial, uint64_t seed);

struct BatchResult {
  std::vector<TrialMetrics> rows;  // trial-major, iscvx before scvx per trial
  int exit_code = 0;
};

/// Runs the randomized benchmark; writes metrics.csv and timing.json under
/// cfg.out_dir. Exit code 2 when any trial fails to converge.
BatchResult run_batch(const ExperimentConfig& cfg);

/// Runs one solve from the slerp initialization; writes trajectory JSON and
/// the per-iteration CSV log per algorithm. Returns the process exit code.
int run_single(const ExperimentConfig& cfg);

void export_trajectory(const Trajectory& traj, const AttitudeProblem& prob,
                       const std::string& path);
std::pair<Trajectory, AttitudeProblem> load_trajectory(const std::string& path);

void export_metrics(const std::vector<TrialMetrics>& rows, const std::string& path);
void export_iteration_log(const SolveReport& report, const std::string& path);

/// Column means and sample standard deviations of the numeric metric columns,
/// per algorithm; appended to the CSV as aggregate rows.
struct MetricAggregates {
  std::string algorithm;
  double iter_mean = 0.0, iter_std = 0.0;
  double accepted_mean = 0.0, accepted_std = 0.0;
  double converged_mean = 0.0, converged_std = 0.0;
  double geodesic_mean = 0.0, geodesic_std = 0.0;
  double euclidean_mean = 0.0, euclidean_std = 0.0;
  double violation_mean = 0.0, violation_std = 0.0;
  double drift_mean = 0.0, drift_std = 0.0;
  double wall_mean_ms = 0.0, wall_std_ms = 0.0;
};
std::vector<MetricAggregates> aggregate_metrics(const std::vector<TrialMetrics>& rows);

}  // namespace iscvx
