#include <doctest.h>

#include <iscvx/harness.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace iscvx;
using doctest::Approx;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

ExperimentConfig tiny_config(const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.n_steps = 8;
  cfg.tau = 0.1;
  cfg.theta_max_deg = 25.0;
  cfg.trials = 2;
  cfg.seed = 7;
  cfg.algorithm = Algorithm::both;
  cfg.out_dir = out_dir;
  return cfg;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("algorithm names round-trip") {
  CHECK(algorithm_from_string("iscvx") == Algorithm::iscvx);
  CHECK(algorithm_from_string("scvx") == Algorithm::scvx);
  CHECK(algorithm_from_string("both") == Algorithm::both);
  CHECK_THROWS_AS((void)algorithm_from_string("other"), std::invalid_argument);
}

TEST_CASE("sampled problems respect the margins") {
  ExperimentConfig cfg;
  cfg.n_steps = 20;
  cfg.theta_max_deg = 20.0;
  const auto seeds = trial_seeds(99, 20);
  int active = 0;
  for (uint64_t seed : seeds) {
    const AttitudeProblem prob = sample_problem(cfg, seed);
    CHECK(keepout_value(prob.q0, prob) <= -0.01);
    CHECK(keepout_value(prob.qd, prob) <= -0.01);
    CHECK((inverse(prob.q0) * prob.qd).w >= 0.0);
    const Trajectory path = slerp_init(prob);
    for (const auto& q : path.states)
      if (keepout_value(q, prob) > 0.0) {
        ++active;
        break;
      }
  }
  CHECK(active > 10);  // the cone matters in most trials
}

TEST_CASE("per-trial sampling is deterministic and paired") {
  ExperimentConfig cfg;
  cfg.n_steps = 10;
  const auto seeds = trial_seeds(1234, 3);
  for (uint64_t seed : seeds) {
    const AttitudeProblem a = sample_problem(cfg, seed);
    const AttitudeProblem b = sample_problem(cfg, seed);
    CHECK((a.q0.coeffs() - b.q0.coeffs()).norm() == 0.0);
    CHECK((a.qd.coeffs() - b.qd.coeffs()).norm() == 0.0);
    CHECK((a.t_o - b.t_o).norm() == 0.0);
  }
}

TEST_CASE("trajectory export round-trips exactly") {
  ExperimentConfig cfg;
  cfg.n_steps = 6;
  const AttitudeProblem prob = sample_problem(cfg, trial_seeds(5, 1)[0]);
  const Trajectory traj = slerp_init(prob);

  const std::string path = "harness_test_traj.json";
  export_trajectory(traj, prob, path);
  const auto [loaded, lprob] = load_trajectory(path);
  REQUIRE(loaded.states.size() == traj.states.size());
  for (size_t i = 0; i < traj.states.size(); ++i)
    CHECK((loaded.states[i].coeffs() - traj.states[i].coeffs()).norm() == 0.0);
  for (size_t i = 0; i < traj.controls.size(); ++i)
    CHECK((loaded.controls[i] - traj.controls[i]).norm() == 0.0);
  CHECK(lprob.theta_max == prob.theta_max);
  CHECK(lprob.tau == prob.tau);
  CHECK((lprob.t_o - prob.t_o).norm() == 0.0);
  std::filesystem::remove(path);

  Trajectory empty;
  empty.states.push_back(prob.q0);
  CHECK_THROWS_AS(export_trajectory(empty, prob, path), std::invalid_argument);
}

TEST_CASE("csv headers match the documented schema") {
  CHECK(std::string(kMetricsCsvHeader) ==
        "algorithm,trial,seed,iterations,accepted,converged,geodesic_cost,"
        "euclidean_cost,max_keepout_violation,max_manifold_drift");
  CHECK(std::string(kIterationCsvHeader) ==
        "iter,J,L,delta_J,delta_L,rho,radius,accepted");
}

TEST_CASE("single-trial aggregates equal the row") {
  auto cfg = tiny_config("harness_out_single");
  cfg.trials = 1;
  cfg.algorithm = Algorithm::iscvx;
  const BatchResult res = run_batch(cfg);
  REQUIRE(res.rows.size() == 1);
  const auto aggs = aggregate_metrics(res.rows);
  REQUIRE(aggs.size() == 1);
  CHECK(aggs[0].iter_mean == double(res.rows[0].iterations));
  CHECK(aggs[0].iter_std == 0.0);
  CHECK(aggs[0].geodesic_mean == res.rows[0].geodesic_cost);
  std::filesystem::remove_all("harness_out_single");
}

TEST_CASE("aggregates are recomputable from the rows") {
  auto cfg = tiny_config("harness_out_agg");
  cfg.trials = 4;
  const BatchResult res = run_batch(cfg);
  for (const auto& agg : aggregate_metrics(res.rows)) {
    double sum = 0.0;
    int count = 0;
    for (const auto& r : res.rows)
      if (r.algorithm == agg.algorithm) {
        sum += r.geodesic_cost;
        ++count;
      }
    const double mean = sum / count;
    CHECK(agg.geodesic_mean == Approx(mean).epsilon(1e-12));
    double sq = 0.0;
    for (const auto& r : res.rows)
      if (r.algorithm == agg.algorithm)
        sq += (r.geodesic_cost - mean) * (r.geodesic_cost - mean);
    CHECK(agg.geodesic_std == Approx(std::sqrt(sq / (count - 1))).epsilon(1e-12));
  }
  std::filesystem::remove_all("harness_out_agg");
}

TEST_CASE("paired trials give both algorithms identical problems") {
  auto cfg = tiny_config("harness_out_paired");
  const BatchResult res = run_batch(cfg);
  REQUIRE(res.rows.size() == 4);  // two trials, two algorithms
  for (int t = 0; t < 2; ++t) {
    CHECK(res.rows[2 * t].algorithm == "iscvx");
    CHECK(res.rows[2 * t + 1].algorithm == "scvx");
    CHECK(res.rows[2 * t].seed == res.rows[2 * t + 1].seed);
    CHECK(res.rows[2 * t].trial == res.rows[2 * t + 1].trial);
  }
  std::filesystem::remove_all("harness_out_paired");
}

TEST_CASE("batches are byte-identical across reruns and worker counts") {
  auto cfg1 = tiny_config("harness_out_d1");
  cfg1.jobs = 1;
  auto cfg2 = tiny_config("harness_out_d2");
  cfg2.jobs = 2;
  (void)run_batch(cfg1);
  (void)run_batch(cfg2);
  CHECK(slurp("harness_out_d1/metrics.csv") == slurp("harness_out_d2/metrics.csv"));
  std::filesystem::remove_all("harness_out_d1");
  std::filesystem::remove_all("harness_out_d2");
}

TEST_CASE("iteration logs are written for single runs") {
  auto cfg = tiny_config("harness_out_single_run");
  cfg.algorithm = Algorithm::iscvx;
  const int code = run_single(cfg);
  CHECK(code == 0);
  CHECK(std::filesystem::exists("harness_out_single_run/trajectory_iscvx.json"));
  const std::string log = slurp("harness_out_single_run/iterations_iscvx.csv");
  CHECK(log.rfind(kIterationCsvHeader, 0) == 0);
  std::filesystem::remove_all("harness_out_single_run");
}

TEST_CASE("non-converged trials surface through the exit code") {
  auto cfg = tiny_config("harness_out_cap");
  cfg.algorithm = Algorithm::iscvx;
  cfg.params.max_outer_iters = 1;  // cannot converge in one solve here
  cfg.params.eps_tol = 1e-12;
  const BatchResult res = run_batch(cfg);
  CHECK(res.exit_code == 2);
  std::filesystem::remove_all("harness_out_cap");
}

TEST_CASE("fixed problem overrides are honored") {
  ExperimentConfig cfg = tiny_config("harness_out_fixed");
  Xoshiro256pp rng(4242);
  const Quaternion q0 = rng.unit_quaternion();
  cfg.q0 = q0;
  cfg.qd = q0;
  cfg.t_o = (-rotate(q0, Vec3(0, 0, 1))).normalized();
  const AttitudeProblem prob = sample_problem(cfg, 123456);
  CHECK((prob.q0.coeffs() - q0.coeffs()).norm() == 0.0);
  CHECK((prob.qd.coeffs() - q0.coeffs()).norm() == 0.0);
  std::filesystem::remove_all("harness_out_fixed");
}

}  // TEST_SUITE
