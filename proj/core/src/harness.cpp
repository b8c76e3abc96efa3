#include "iscvx/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace iscvx {

namespace {

// Sampling margins: endpoints must clear the cone by this much in s-units;
// the interpolated path should enter the cone by half the attainable depth
// (falling back to a near-approach, then to any feasible direction, for
// geometries admitting no crossing) so the constraint shapes every trial.
constexpr double kEndpointMargin = 0.01;
constexpr double kPenetrationFraction = 0.9;
constexpr int kStagedResamples[] = {6000, 4000, 4000, 100000};

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

const char* const kMetricsCsvHeader =
    "algorithm,trial,seed,iterations,accepted,converged,geodesic_cost,"
    "euclidean_cost,max_keepout_violation,max_manifold_drift";

const char* const kIterationCsvHeader =
    "iter,J,L,delta_J,delta_L,rho,radius,accepted";

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "iscvx") return Algorithm::iscvx;
  if (s == "scvx") return Algorithm::scvx;
  if (s == "both") return Algorithm::both;
  throw std::invalid_argument("unknown algorithm '" + s + "'");
}

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::iscvx: return "iscvx";
    case Algorithm::scvx: return "scvx";
    case Algorithm::both: return "both";
  }
  return "unknown";
}

std::vector<uint64_t> trial_seeds(uint64_t master_seed, int trials) {
  SplitMix64 sm(master_seed);
  std::vector<uint64_t> seeds(trials);
  for (auto& s : seeds) s = sm.next();
  return seeds;
}

AttitudeProblem sample_problem(const ExperimentConfig& cfg, uint64_t trial_seed) {
  const double theta = cfg.theta_max_deg * M_PI / 180.0;
  Xoshiro256pp rng(trial_seed);

  Quaternion q0 = cfg.q0.value_or(rng.unit_quaternion());
  Quaternion qd = cfg.qd.value_or(rng.unit_quaternion());
  if (q0.coeffs().dot(qd.coeffs()) < 0.0) qd = -qd;

  if (cfg.t_o) {
    return AttitudeProblem(q0, qd, cfg.y_b, *cfg.t_o, theta, cfg.n_steps, cfg.tau);
  }

  // Prefer directions whose cone blocks a sustained stretch of the
  // interpolated path; fall back to a crossing, then a near-approach, then
  // any feasible direction for geometries admitting nothing stronger.
  const double s_depth = 1.0 - std::cos(theta);
  const double thresholds[] = {kPenetrationFraction * s_depth,
                               kPenetrationFraction * s_depth,
                               -kPenetrationFraction * s_depth, -2.0};
  const int blocked_needed[] = {(cfg.n_steps + 3) / 4, 1, 0, 0};
  for (int stage = 0; stage < 4; ++stage) {
    const double threshold = thresholds[stage];
    Xoshiro256pp t_rng(trial_seed ^ 0x9e3779b97f4a7c15ULL);
    for (int attempt = 0; attempt < kStagedResamples[stage]; ++attempt) {
      const Vec3 t_o = t_rng.unit_vec3();
      AttitudeProblem prob(q0, qd, cfg.y_b, t_o, theta, cfg.n_steps, cfg.tau);
      if (keepout_value(prob.q0, prob) > -kEndpointMargin) continue;
      if (keepout_value(prob.qd, prob) > -kEndpointMargin) continue;
      const Trajectory path = slerp_init(prob);
      double s_max = -2.0;
      int blocked = 0;
      for (const auto& q : path.states) {
        const double s = keepout_value(q, prob);
        s_max = std::max(s_max, s);
        if (s > 0.0) ++blocked;
      }
      if (s_max < threshold || blocked < blocked_needed[stage]) continue;
      return prob;
    }
  }
  throw std::runtime_error("sample_problem: no admissible keep-out direction found");
}

double geodesic_cost_metric(const Trajectory& traj, const AttitudeProblem& prob) {
  Trajectory unit = traj;
  for (auto& q : unit.states) {
    const Vec4 c = q.coeffs() / q.norm();
    q = Quaternion::from_coeffs(c);
  }
  return trajectory_cost(unit, prob);
}

TrialMetrics metrics_from_report(const SolveReport& report, const AttitudeProblem& prob,
                                 int trial, uint64_t seed) {
  TrialMetrics m;
  m.algorithm = report.backend;
  m.trial = trial;
  m.seed = seed;
  m.iterations = report.total_solves;
  m.accepted = report.accepted_count;
  m.converged = report.converged();
  m.geodesic_cost = geodesic_cost_metric(report.trajectory, prob);
  m.euclidean_cost = euclidean_trajectory_cost(report.trajectory, prob);
  double viol = 0.0;
  for (const auto& q : report.trajectory.states) {
    const Vec4 c = q.coeffs() / q.norm();
    viol = std::max(viol, keepout_value(Quaternion::from_coeffs(c), prob));
  }
  m.max_keepout_violation = std::max(0.0, viol);
  double drift = 0.0;
  for (const auto& q : report.trajectory.states)
    drift = std::max(drift, std::abs(q.norm() - 1.0));
  m.max_manifold_drift = drift;
  m.wall_ms = report.wall_time_ms;
  return m;
}

std::vector<MetricAggregates> aggregate_metrics(const std::vector<TrialMetrics>& rows) {
  std::vector<std::string> algos;
  for (const auto& r : rows)
    if (std::find(algos.begin(), algos.end(), r.algorithm) == algos.end())
      algos.push_back(r.algorithm);

  std::vector<MetricAggregates> out;
  for (const auto& algo : algos) {
    std::vector<const TrialMetrics*> sel;
    for (const auto& r : rows)
      if (r.algorithm == algo) sel.push_back(&r);
    const double n = static_cast<double>(sel.size());

    auto stats = [&](auto getter, double& mean, double& stddev) {
      double acc = 0.0;
      for (auto* r : sel) acc += getter(*r);
      mean = acc / n;
      stddev = 0.0;
      if (sel.size() >= 2) {
        double sq = 0.0;
        for (auto* r : sel) sq += (getter(*r) - mean) * (getter(*r) - mean);
        stddev = std::sqrt(sq / (n - 1.0));
      }
    };

    MetricAggregates agg;
    agg.algorithm = algo;
    stats([](const TrialMetrics& r) { return double(r.iterations); }, agg.iter_mean,
          agg.iter_std);
    stats([](const TrialMetrics& r) { return double(r.accepted); }, agg.accepted_mean,
          agg.accepted_std);
    stats([](const TrialMetrics& r) { return r.converged ? 1.0 : 0.0; },
          agg.converged_mean, agg.converged_std);
    stats([](const TrialMetrics& r) { return r.geodesic_cost; }, agg.geodesic_mean,
          agg.geodesic_std);
    stats([](const TrialMetrics& r) { return r.euclidean_cost; }, agg.euclidean_mean,
          agg.euclidean_std);
    stats([](const TrialMetrics& r) { return r.max_keepout_violation; },
          agg.violation_mean, agg.violation_std);
    stats([](const TrialMetrics& r) { return r.max_manifold_drift; }, agg.drift_mean,
          agg.drift_std);
    stats([](const TrialMetrics& r) { return r.wall_ms; }, agg.wall_mean_ms,
          agg.wall_std_ms);
    out.push_back(std::move(agg));
  }
  return out;
}

namespace {

void write_metric_row(std::ofstream& os, const TrialMetrics& m) {
  os << m.algorithm << ',' << m.trial << ',' << m.seed << ',' << m.iterations << ','
     << m.accepted << ',' << (m.converged ? 1 : 0) << ',' << fmt17(m.geodesic_cost)
     << ',' << fmt17(m.euclidean_cost) << ',' << fmt17(m.max_keepout_violation) << ','
     << fmt17(m.max_manifold_drift) << '\n';
}

void write_aggregate_rows(std::ofstream& os, const MetricAggregates& agg) {
  os << agg.algorithm << ",mean,," << fmt17(agg.iter_mean) << ','
     << fmt17(agg.accepted_mean) << ',' << fmt17(agg.converged_mean) << ','
     << fmt17(agg.geodesic_mean) << ',' << fmt17(agg.euclidean_mean) << ','
     << fmt17(agg.violation_mean) << ',' << fmt17(agg.drift_mean) << '\n';
  os << agg.algorithm << ",std,," << fmt17(agg.iter_std) << ','
     << fmt17(agg.accepted_std) << ',' << fmt17(agg.converged_std) << ','
     << fmt17(agg.geodesic_std) << ',' << fmt17(agg.euclidean_std) << ','
     << fmt17(agg.violation_std) << ',' << fmt17(agg.drift_std) << '\n';
}

std::ofstream open_or_throw(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  return os;
}

}  // namespace

void export_metrics(const std::vector<TrialMetrics>& rows, const std::string& path) {
  auto os = open_or_throw(path);
  os << kMetricsCsvHeader << '\n';
  for (const auto& r : rows) write_metric_row(os, r);
  for (const auto& agg : aggregate_metrics(rows)) write_aggregate_rows(os, agg);
}

void export_iteration_log(const SolveReport& report, const std::string& path) {
  auto os = open_or_throw(path);
  os << kIterationCsvHeader << '\n';
  for (const auto& row : report.log) {
    os << row.k << ',' << fmt17(row.j_current) << ',' << fmt17(row.l_model) << ','
       << fmt17(row.delta_j) << ',' << fmt17(row.delta_l) << ',' << fmt17(row.rho)
       << ',' << fmt17(row.radius) << ',' << (row.accepted ? 1 : 0) << '\n';
  }
}

namespace {

nlohmann::json vec3_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
nlohmann::json quat_json(const Quaternion& q) { return {q.w, q.x, q.y, q.z}; }

Vec3 vec3_from(const nlohmann::json& j) { return Vec3(j.at(0), j.at(1), j.at(2)); }
Quaternion quat_from(const nlohmann::json& j) {
  return {j.at(0), j.at(1), j.at(2), j.at(3)};
}

}  // namespace

void export_trajectory(const Trajectory& traj, const AttitudeProblem& prob,
                       const std::string& path) {
  if (traj.controls.size() < 2 ||
      traj.states.size() != traj.controls.size() + 1)
    throw std::invalid_argument("export_trajectory: malformed trajectory");
  nlohmann::json j;
  j["states"] = nlohmann::json::array();
  for (const auto& q : traj.states) j["states"].push_back(quat_json(q));
  j["controls"] = nlohmann::json::array();
  for (const auto& w : traj.controls) j["controls"].push_back(vec3_json(w));
  j["problem"] = {{"q0", quat_json(prob.q0)},     {"qd", quat_json(prob.qd)},
                  {"y_b", vec3_json(prob.y_b)},   {"t_o", vec3_json(prob.t_o)},
                  {"theta_max_rad", prob.theta_max}, {"n_steps", prob.n_steps},
                  {"tau", prob.tau}};
  auto os = open_or_throw(path);
  os << j.dump(2) << '\n';
}

std::pair<Trajectory, AttitudeProblem> load_trajectory(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  nlohmann::json j;
  is >> j;
  const auto& pj = j.at("problem");
  AttitudeProblem prob(quat_from(pj.at("q0")), quat_from(pj.at("qd")),
                       vec3_from(pj.at("y_b")), vec3_from(pj.at("t_o")),
                       pj.at("theta_max_rad"), pj.at("n_steps"), pj.at("tau"));
  Trajectory traj;
  for (const auto& s : j.at("states")) traj.states.push_back(quat_from(s));
  for (const auto& c : j.at("controls")) traj.controls.push_back(vec3_from(c));
  if (traj.controls.size() < 2 || traj.states.size() != traj.controls.size() + 1)
    throw std::runtime_error("load_trajectory: malformed trajectory in '" + path + "'");
  return {traj, prob};
}

namespace {

struct TrialOutcome {
  std::vector<TrialMetrics> rows;  // one per algorithm run on this trial
};

std::vector<Algorithm> selected_algorithms(Algorithm a) {
  if (a == Algorithm::both) return {Algorithm::iscvx, Algorithm::scvx};
  return {a};
}

TrialOutcome run_trial(const ExperimentConfig& cfg, int trial, uint64_t seed) {
  const AttitudeProblem prob = sample_problem(cfg, seed);
  const Trajectory init = slerp_init(prob);
  TrialOutcome out;
  for (Algorithm a : selected_algorithms(cfg.algorithm)) {
    SolveReport rep = (a == Algorithm::iscvx) ? solve_iscvx(prob, init, cfg.params)
                                              : solve_scvx(prob, init, cfg.params);
    out.rows.push_back(metrics_from_report(rep, prob, trial, seed));
  }
  return out;
}

}  // namespace

BatchResult run_batch(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("run_batch: trials must be >= 1");
  cfg.params.validate();
  std::filesystem::create_directories(cfg.out_dir);

  const std::vector<uint64_t> seeds = trial_seeds(cfg.seed, cfg.trials);
  std::vector<TrialOutcome> outcomes(cfg.trials);

  const int jobs = std::max(1, cfg.jobs);
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;

  auto work = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= cfg.trials || failed.load()) break;
      try {
        outcomes[i] = run_trial(cfg, i, seeds[i]);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        failure = e.what();
        failed.store(true);
        break;
      }
    }
  };
  if (jobs == 1) {
    work();
  } else {
    for (int t = 0; t < jobs; ++t) workers.emplace_back(work);
    for (auto& w : workers) w.join();
  }
  if (failed.load()) throw std::runtime_error("run_batch: trial failed: " + failure);

  BatchResult result;
  // Rows collected in trial order regardless of worker scheduling.
  for (int i = 0; i < cfg.trials; ++i)
    for (auto& row : outcomes[i].rows) result.rows.push_back(std::move(row));

  export_metrics(result.rows, cfg.out_dir + "/metrics.csv");

  nlohmann::json timing;
  timing["per_trial"] = nlohmann::json::array();
  for (const auto& r : result.rows)
    timing["per_trial"].push_back(
        {{"algorithm", r.algorithm}, {"trial", r.trial}, {"wall_ms", r.wall_ms}});
  for (const auto& agg : aggregate_metrics(result.rows)) {
    timing["summary"][agg.algorithm] = {{"mean_ms", agg.wall_mean_ms},
                                        {"std_ms", agg.wall_std_ms}};
  }
  {
    auto os = open_or_throw(cfg.out_dir + "/timing.json");
    os << timing.dump(2) << '\n';
  }

  for (const auto& r : result.rows)
    if (!r.converged) result.exit_code = 2;
  return result;
}

int run_single(const ExperimentConfig& cfg) {
  cfg.params.validate();
  std::filesystem::create_directories(cfg.out_dir);
  const std::vector<uint64_t> seeds = trial_seeds(cfg.seed, 1);
  const AttitudeProblem prob = sample_problem(cfg, seeds[0]);
  const Trajectory init = slerp_init(prob);

  int exit_code = 0;
  for (Algorithm a : selected_algorithms(cfg.algorithm)) {
    const SolveReport rep = (a == Algorithm::iscvx)
                                ? solve_iscvx(prob, init, cfg.params)
                                : solve_scvx(prob, init, cfg.params);
    const std::string tag = algorithm_name(a);
    export_trajectory(rep.trajectory, prob, cfg.out_dir + "/trajectory_" + tag + ".json");
    export_iteration_log(rep, cfg.out_dir + "/iterations_" + tag + ".csv");
    std::printf("%s: %s after %d solves (%d accepted), J-final components: "
                "geodesic %.6g, euclidean %.6g, wall %.1f ms\n",
                tag.c_str(), termination_name(rep.termination), rep.total_solves,
                rep.accepted_count, geodesic_cost_metric(rep.trajectory, prob),
                euclidean_trajectory_cost(rep.trajectory, prob), rep.wall_time_ms);
    if (rep.domain_warning_count > 0)
      std::fprintf(stderr, "%s: %d cost-domain warnings during the solve\n",
                   tag.c_str(), rep.domain_warning_count);
    if (!rep.converged()) exit_code = 2;
  }
  return exit_code;
}

}  // namespace iscvx
