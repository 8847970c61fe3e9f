// OpenMP kernels against their serial references.
#include <benchmark/benchmark.h>

#include "starklab/potentials.hpp"
#include "starklab/randomized.hpp"

using namespace starklab;

namespace {

SmoothnessOptions smooth_opts(int jobs) {
  SmoothnessOptions o;
  o.x_max = 20.0;
  o.eps_points = 50;
  o.jobs = jobs;
  return o;
}

EnsembleConfig block_cfg(int jobs) {
  EnsembleConfig c;
  c.realizations = 16;
  c.jobs = jobs;
  return c;
}

const std::shared_ptr<const BumpFunction>& bump() {
  static const auto f = std::make_shared<const BumpFunction>(BumpFunction::default_bump());
  return f;
}

void BM_smoothness_omp(benchmark::State& st) {
  const PotentialSpec spec = make_random_bump(1);
  for (auto _ : st) benchmark::DoNotOptimize(smoothness_report(spec, smooth_opts(static_cast<int>(st.range(0)))));
}
void BM_smoothness_serial(benchmark::State& st) {
  const PotentialSpec spec = make_random_bump(1);
  for (auto _ : st) benchmark::DoNotOptimize(serial::smoothness_report(spec, smooth_opts(1)));
}

void BM_block_omp(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(run_block_ensemble(bump(), 0.0, 10, block_cfg(static_cast<int>(st.range(0)))));
}
void BM_block_serial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(serial::run_block_ensemble(bump(), 0.0, 10, block_cfg(1)));
}

void BM_chain_omp(benchmark::State& st) {
  EnsembleConfig c = block_cfg(static_cast<int>(st.range(0)));
  c.realizations = 4;
  c.n_max = 20;
  for (auto _ : st) benchmark::DoNotOptimize(run_chain_ensemble(bump(), 0.0, c));
}
void BM_chain_serial(benchmark::State& st) {
  EnsembleConfig c = block_cfg(1);
  c.realizations = 4;
  c.n_max = 20;
  for (auto _ : st) benchmark::DoNotOptimize(serial::run_chain_ensemble(bump(), 0.0, c));
}

}  // namespace

BENCHMARK(BM_smoothness_omp)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_smoothness_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_block_omp)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_block_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_chain_omp)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_chain_serial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
