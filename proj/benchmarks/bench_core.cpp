// Microbenchmarks for the hot paths: the per-step trajectory loop, the
// master-equation right-hand side, and the accumulator merge.

#include <benchmark/benchmark.h>

#include <vector>

#include "cavfeed/accumulator.hpp"
#include "cavfeed/ensemble.hpp"
#include "cavfeed/fock.hpp"
#include "cavfeed/rng.hpp"
#include "cavfeed/trajectory.hpp"

namespace {

using namespace cavfeed;

CavityParams bench_params() {
  CavityParams p;
  p.omega = 2.0;
  p.phi = 0.5 * 3.14159265358979323846;
  p.eta = 0.5;
  p.beta = Complex(2.0, 0.0);
  return validated(p);
}

SimConfig bench_config(std::size_t n_traj) {
  SimConfig cfg;
  cfg.n_traj = n_traj;
  cfg.t_max = 2.0;
  return cfg;
}

void BM_trajectory_steps(benchmark::State& state) {
  const CavityParams p = bench_params();
  const SimConfig cfg = bench_config(1);
  const TimeGrid grid = make_grid(cfg);
  std::uint64_t index = 0;
  for (auto _ : state) {
    TrajectoryRecord rec = simulate_trajectory(p, cfg, 0);
    benchmark::DoNotOptimize(rec.alpha_samples.data());
    ++index;
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(grid.n_steps));
}
BENCHMARK(BM_trajectory_steps);

void BM_ensemble_block(benchmark::State& state) {
  const CavityParams p = bench_params();
  const SimConfig cfg = bench_config(kStatBlock);
  for (auto _ : state) {
    EnsembleAccumulator acc = run_ensemble(p, cfg, EnsemblePrep::measurement, 1);
    benchmark::DoNotOptimize(acc.n_traj());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(kStatBlock));
}
BENCHMARK(BM_ensemble_block);

void BM_lindblad_rhs(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const CavityParams p = bench_params();
  const FockWorkspace ws = make_workspace(p, dim, true);
  const DenseMatrix rho = coherent_state(steady_state_alpha(p), dim);
  for (auto _ : state) {
    DenseMatrix out = lindblad_rhs(ws, rho);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_lindblad_rhs)->Arg(32)->Arg(64)->Arg(128);

void BM_accumulator_merge(benchmark::State& state) {
  const CavityParams p = bench_params();
  const SimConfig cfg = bench_config(4 * kStatBlock);
  const std::vector<EnsembleAccumulator> blocks =
      run_ensemble_blocks(p, cfg, EnsemblePrep::measurement, 1);
  for (auto _ : state) {
    EnsembleAccumulator merged = merge_blocks(blocks);
    benchmark::DoNotOptimize(merged.n_traj());
  }
}
BENCHMARK(BM_accumulator_merge);

}  // namespace

BENCHMARK_MAIN();
