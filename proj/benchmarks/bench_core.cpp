#include <benchmark/benchmark.h>

#include "anderson/equilibrium.hpp"
#include "anderson/rpse.hpp"

using namespace anderson;

namespace {

EigenSystem prepared(int n) {
  return diagonalize(build_hamiltonian(sample_disorder({n, 0.5, 7}, 0)));
}

void BM_Diagonalize(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const auto h = build_hamiltonian(sample_disorder({n, 0.5, 7}, 0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(diagonalize(h));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_Diagonalize)->Arg(64)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond)
    ->Complexity(benchmark::oNCubed);

void BM_DisplacementProfile(benchmark::State& state) {
  const auto eig = prepared(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(displacement_profile(eig));
  }
}
BENCHMARK(BM_DisplacementProfile)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_EvolveAndPopulations(benchmark::State& state) {
  const auto eig = prepared(static_cast<int>(state.range(0)));
  const PureState psi0 = localized_state(eig, 0);
  double t = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(site_populations(eig, evolve(eig, psi0, t)));
    t += 1.0;
  }
}
BENCHMARK(BM_EvolveAndPopulations)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_TrajectoryAverage(benchmark::State& state) {
  const auto eig = prepared(64);
  const PureState psi0 = localized_state(eig, 0);
  const TimeGrid grid{1e2, 1e4, static_cast<int>(state.range(0)), 1};
  for (auto _ : state) {
    benchmark::DoNotOptimize(trajectory_time_average(eig, psi0, grid, 1));
  }
}
BENCHMARK(BM_TrajectoryAverage)->Arg(512)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_SampleRpse(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  RngStream rng(1, streams::kTest);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_rpse(n, rng));
  }
}
BENCHMARK(BM_SampleRpse)->Arg(32)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_McVerifyMoments(benchmark::State& state) {
  const auto eig = prepared(16);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mc_verify_moments(eig, state.range(0), 3, 1));
  }
}
BENCHMARK(BM_McVerifyMoments)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_EnsembleMoments(benchmark::State& state) {
  const auto eig = prepared(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ensemble_moments(eig));
  }
}
BENCHMARK(BM_EnsembleMoments)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
