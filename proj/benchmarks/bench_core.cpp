// Micro-benchmarks for the hot paths: gram accumulation, the ridge solve
// behind every fit, and batched scoring. Run with --benchmark_min_time=... to
// stabilize numbers on a loaded machine.

#include <benchmark/benchmark.h>

#include "lare/models.hpp"
#include "lare/normalization.hpp"
#include "lare/synthetic.hpp"

namespace {

lare::InteractionMatrix bench_matrix(uint32_t items) {
  lare::SynthSpec spec;
  spec.users = items / 2 + 200;
  spec.items = items;
  spec.events = static_cast<uint64_t>(items) * 60;
  spec.seed = 99;
  return lare::synthesize(spec);
}

void BM_Gram(benchmark::State& state) {
  auto x = bench_matrix(static_cast<uint32_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lare::gram(x));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(x.nnz()));
}

void BM_GramRescaled(benchmark::State& state) {
  auto x = bench_matrix(static_cast<uint32_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(lare::degree_power_gram(x, 0.7, 0.3, 1.0));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(x.nnz()));
}

void BM_FitPlain(benchmark::State& state) {
  auto x = bench_matrix(static_cast<uint32_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lare::fit_lae(x, 100.0));
}

void BM_FitRescaled(benchmark::State& state) {
  auto x = bench_matrix(static_cast<uint32_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        lare::fit_lae(x, 1.0, lare::NormRecipe::dan(0.3, 0.8)));
}

void BM_Score(benchmark::State& state) {
  auto x = bench_matrix(static_cast<uint32_t>(state.range(0)));
  auto model = lare::fit_lae(x, 100.0);
  uint32_t user = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lare::score(model, x.items_of(user)));
    user = (user + 1) % x.rows();
  }
  state.SetItemsProcessed(state.iterations() * model.num_items);
}

BENCHMARK(BM_Gram)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramRescaled)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitPlain)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitRescaled)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Score)->Arg(1024)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
