#include <benchmark/benchmark.h>

#include <iscvx/driver.hpp>
#include <iscvx/linearize.hpp>
#include <iscvx/rng.hpp>
#include <iscvx/scvx.hpp>
#include <iscvx/subproblem.hpp>

using namespace iscvx;

namespace {

AttitudeProblem make_problem(uint64_t seed, int n, double tau) {
  Xoshiro256pp rng(seed);
  return AttitudeProblem(rng.unit_quaternion(), rng.unit_quaternion(), Vec3(0, 0, 1),
                         rng.unit_vec3(), 30.0 * M_PI / 180.0, n, tau);
}

}  // namespace

static void BM_QuatExpLog(benchmark::State& state) {
  Xoshiro256pp rng(1);
  const Vec3 w = rng.unit_vec3() * 1.2;
  for (auto _ : state) {
    benchmark::DoNotOptimize(qlog(qexp(w)));
  }
}
BENCHMARK(BM_QuatExpLog);

static void BM_Dlog(benchmark::State& state) {
  Xoshiro256pp rng(2);
  const Quaternion q = rng.unit_quaternion();
  const Vec4 v = frame_reconstruct_q(q, rng.unit_vec3());
  for (auto _ : state) {
    benchmark::DoNotOptimize(dlog(q, v));
  }
}
BENCHMARK(BM_Dlog);

static void BM_LinearizeTrajectory(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const AttitudeProblem prob = make_problem(3, n, 0.1);
  const Trajectory traj = slerp_init(prob);
  for (auto _ : state) {
    benchmark::DoNotOptimize(linearize_trajectory(traj, prob));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_LinearizeTrajectory)->Arg(30)->Arg(60)->Complexity();

static void BM_SubproblemSolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const AttitudeProblem prob = make_problem(4, n, 0.1);
  const LinearizedTrajectory lin = linearize_trajectory(slerp_init(prob), prob);
  const ConvexSubproblem sp = assemble(lin, 1.0, std::vector<double>(n, 300.0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve(sp));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_SubproblemSolve)->Arg(15)->Arg(30)->Arg(60)->Complexity();

static void BM_SolveIscvx(benchmark::State& state) {
  const AttitudeProblem prob = make_problem(5, static_cast<int>(state.range(0)), 0.1);
  const Trajectory init = slerp_init(prob);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_iscvx(prob, init, IscvxParams{}));
  }
}
BENCHMARK(BM_SolveIscvx)->Arg(15)->Arg(30)->Unit(benchmark::kMillisecond);

static void BM_SolveScvx(benchmark::State& state) {
  const AttitudeProblem prob = make_problem(5, static_cast<int>(state.range(0)), 0.1);
  const Trajectory init = slerp_init(prob);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_scvx(prob, init, IscvxParams{}));
  }
}
BENCHMARK(BM_SolveScvx)->Arg(15)->Arg(30)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
