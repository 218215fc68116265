#include <benchmark/benchmark.h>

#include <vector>

#include "confcov/conformal.hpp"
#include "confcov/guarantees.hpp"
#include "confcov/rng.hpp"
#include "confcov/simulation.hpp"
#include "confcov/special.hpp"

namespace {

using namespace confcov;

void BM_BinomialCdf(benchmark::State& state) {
  const auto n = static_cast<std::uint64_t>(state.range(0));
  const auto t = static_cast<std::int64_t>(n / 10);
  for (auto _ : state) benchmark::DoNotOptimize(special::binomial_cdf(t, n, 0.1001));
}
BENCHMARK(BM_BinomialCdf)->RangeMultiplier(10)->Range(10, 1000000);

void BM_VovkDelta(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(vovk_delta({m, 0.1, 0.05}));
}
BENCHMARK(BM_VovkDelta)->RangeMultiplier(10)->Range(10, 100000);

void BM_Plan(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(plan_min_m({0.1, 0.02, 0.01, 10000}));
}
BENCHMARK(BM_Plan);

void BM_Calibrate(benchmark::State& state) {
  Xoshiro256 rng(1);
  std::vector<double> scores(static_cast<std::size_t>(state.range(0)));
  for (double& s : scores) s = rng.uniform01();
  for (auto _ : state) benchmark::DoNotOptimize(calibrate(scores, 0.1, LabelSpace{9}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Calibrate)->RangeMultiplier(10)->Range(10, 100000);

void BM_RunTrial(benchmark::State& state) {
  SimulationConfig c;
  c.m = static_cast<std::size_t>(state.range(0));
  c.eval_size = 1000;
  const auto source = ScoreSource::synthetic();
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_trial(c, source, i++));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.m + c.eval_size));
}
BENCHMARK(BM_RunTrial)->Arg(10)->Arg(50)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
