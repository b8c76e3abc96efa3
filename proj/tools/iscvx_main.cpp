// Command line interface: single solves and randomized benchmark batches.
//
//   iscvx solve --n-steps 30 --tau 0.1 --theta-max-deg 30 --seed 1 --out-dir out
//   iscvx bench --trials 100 --seed 7 --algorithm both --jobs 4 --out-dir out
//
// Exit codes: 0 on success, 2 when any solve failed to converge, 1 on error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include <iscvx/harness.hpp>
#include <iscvx/linearize.hpp>
#include <iscvx/subproblem.hpp>

namespace {

using iscvx::ExperimentConfig;

iscvx::Quaternion quat_from_json(const nlohmann::json& j) {
  return {j.at(0), j.at(1), j.at(2), j.at(3)};
}

iscvx::Vec3 vec3_from_json(const nlohmann::json& j) {
  return iscvx::Vec3(j.at(0), j.at(1), j.at(2));
}

// Config file keys use the flag names; flags win on conflict.
void apply_config_file(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file '" + path + "'");
  nlohmann::json j;
  is >> j;
  if (j.contains("n-steps")) cfg.n_steps = j["n-steps"];
  if (j.contains("tau")) cfg.tau = j["tau"];
  if (j.contains("theta-max-deg")) cfg.theta_max_deg = j["theta-max-deg"];
  if (j.contains("trials")) cfg.trials = j["trials"];
  if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
  if (j.contains("algorithm"))
    cfg.algorithm = iscvx::algorithm_from_string(j["algorithm"]);
  if (j.contains("lambda")) cfg.params.lambda = j["lambda"];
  if (j.contains("eps-tol")) cfg.params.eps_tol = j["eps-tol"];
  if (j.contains("out-dir")) cfg.out_dir = j["out-dir"];
  if (j.contains("jobs")) cfg.jobs = j["jobs"];
  if (j.contains("q0")) cfg.q0 = quat_from_json(j["q0"]);
  if (j.contains("qd")) cfg.qd = quat_from_json(j["qd"]);
  if (j.contains("t-o")) cfg.t_o = vec3_from_json(j["t-o"]);
  if (j.contains("y-b")) cfg.y_b = vec3_from_json(j["y-b"]);
  if (j.contains("params")) {
    const auto& p = j["params"];
    if (p.contains("r1-init")) cfg.params.r1_init = p["r1-init"];
    if (p.contains("r-min")) cfg.params.r_min = p["r-min"];
    if (p.contains("alpha")) cfg.params.alpha = p["alpha"];
    if (p.contains("beta")) cfg.params.beta = p["beta"];
    if (p.contains("rho0")) cfg.params.rho0 = p["rho0"];
    if (p.contains("rho1")) cfg.params.rho1 = p["rho1"];
    if (p.contains("rho2")) cfg.params.rho2 = p["rho2"];
    if (p.contains("max-outer-iters")) cfg.params.max_outer_iters = p["max-outer-iters"];
  }
}

void dump_first_subproblem(const ExperimentConfig& cfg, const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  const auto prob = iscvx::sample_problem(cfg, iscvx::trial_seeds(cfg.seed, 1)[0]);
  const auto lin = iscvx::linearize_trajectory(iscvx::slerp_init(prob), prob);
  const auto sp = iscvx::assemble(
      lin, cfg.params.r1_init,
      std::vector<double>(lin.n_steps(), cfg.params.lambda));
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "'");
  os << iscvx::dump_json(sp) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"intrinsic trust-region attitude guidance solver and benchmark"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string config_path;
  std::string algorithm = "both";
  std::string dump_path;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file (flags win on conflict)");
    cmd->add_option("--n-steps", cfg.n_steps, "horizon steps N");
    cmd->add_option("--tau", cfg.tau, "timestep seconds");
    cmd->add_option("--theta-max-deg", cfg.theta_max_deg, "keep-out half angle, degrees");
    cmd->add_option("--seed", cfg.seed, "master seed");
    cmd->add_option("--algorithm", algorithm, "iscvx|scvx|both");
    cmd->add_option("--lambda", cfg.params.lambda, "penalty weight");
    cmd->add_option("--eps-tol", cfg.params.eps_tol, "termination tolerance on the cost decrease");
    cmd->add_option("--out-dir", cfg.out_dir, "output directory");
    cmd->add_option("--jobs", cfg.jobs, "parallel trial workers");
    cmd->add_option("--trials", cfg.trials, "number of randomized trials");
  };

  CLI::App* solve = app.add_subcommand("solve", "run one seeded solve and export it");
  add_common(solve);
  solve->add_option("--dump-subproblem", dump_path,
                    "also write the first local model as JSON");

  CLI::App* bench = app.add_subcommand("bench", "run a randomized benchmark batch");
  add_common(bench);

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* active = app.get_subcommands().front();
    if (!config_path.empty()) {
      // start from file values, then overwrite with explicitly passed flags
      ExperimentConfig merged;
      apply_config_file(config_path, merged);
      auto set_if = [&](const char* name, auto member) {
        if (active->count(name) > 0) merged.*member = cfg.*member;
      };
      set_if("--n-steps", &ExperimentConfig::n_steps);
      set_if("--tau", &ExperimentConfig::tau);
      set_if("--theta-max-deg", &ExperimentConfig::theta_max_deg);
      set_if("--trials", &ExperimentConfig::trials);
      set_if("--seed", &ExperimentConfig::seed);
      set_if("--out-dir", &ExperimentConfig::out_dir);
      set_if("--jobs", &ExperimentConfig::jobs);
      if (active->count("--lambda") > 0) merged.params.lambda = cfg.params.lambda;
      if (active->count("--eps-tol") > 0) merged.params.eps_tol = cfg.params.eps_tol;
      if (active->count("--algorithm") > 0)
        merged.algorithm = iscvx::algorithm_from_string(algorithm);
      cfg = merged;
    } else {
      cfg.algorithm = iscvx::algorithm_from_string(algorithm);
    }

    if (solve->parsed()) {
      if (!dump_path.empty()) dump_first_subproblem(cfg, dump_path);
      return iscvx::run_single(cfg);
    }
    const iscvx::BatchResult res = iscvx::run_batch(cfg);
    for (const auto& agg : iscvx::aggregate_metrics(res.rows)) {
      std::printf(
          "%s: iterations %.2f +- %.2f | accepted %.2f | converged %.0f%% | "
          "geodesic cost %.4f | euclidean cost %.4f | wall %.1f +- %.1f ms\n",
          agg.algorithm.c_str(), agg.iter_mean, agg.iter_std, agg.accepted_mean,
          100.0 * agg.converged_mean, agg.geodesic_mean, agg.euclidean_mean,
          agg.wall_mean_ms, agg.wall_std_ms);
    }
    std::printf("wrote %s/metrics.csv and %s/timing.json\n", cfg.out_dir.c_str(),
                cfg.out_dir.c_str());
    return res.exit_code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
