#include <benchmark/benchmark.h>

#include "rsprune/assign.hpp"
#include "rsprune/rng.hpp"
#include "rsprune/sample.hpp"

namespace {

rsprune::AssignmentTable random_table(std::size_t n, std::uint32_t k) {
  rsprune::Rng rng(5);
  rsprune::AssignmentTable t;
  t.k = k;
  for (std::size_t i = 0; i < n; ++i) {
    t.ids.push_back("s" + std::to_string(i));
    t.labels.push_back(static_cast<std::uint32_t>(rng.below(k)));
    t.sims.push_back(static_cast<float>(2.0 * rng.uniform() - 1.0));
  }
  return t;
}

void BM_PoolAndSelect(benchmark::State& state) {
  const auto t = random_table(static_cast<std::size_t>(state.range(0)), 200);
  const std::uint64_t budget = static_cast<std::uint64_t>(state.range(0)) / 2;
  for (auto _ : state) {
    const auto pools = rsprune::pool_by_cluster(t);
    benchmark::DoNotOptimize(rsprune::stratified_select(pools, {budget}));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_PoolAndSelect)->RangeMultiplier(4)->Range(1 << 12, 1 << 18)->Complexity(benchmark::oNLogN)
    ->Unit(benchmark::kMillisecond);

}  // namespace
