#include <benchmark/benchmark.h>

#include "rsprune/assign.hpp"
#include "rsprune/cluster.hpp"
#include "rsprune/synthetic.hpp"

namespace {

void BM_AssignRows(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::uint32_t>(state.range(1));
  const std::uint32_t dim = 128;
  const auto rows = rsprune::random_unit_matrix(n, dim, 1);
  const auto cents = rsprune::random_unit_matrix(k, dim, 2, "c");
  const rsprune::CentroidSet c(dim, cents.data());
  std::vector<std::uint32_t> labels(n);
  std::vector<float> sims(n);
  for (auto _ : state) {
    rsprune::assign_rows(rows.view(), c, labels, sims);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * k * dim));
}
BENCHMARK(BM_AssignRows)->Args({20000, 100})->Args({20000, 200})->Args({40000, 200})->Unit(benchmark::kMillisecond);

void BM_KMeansIteration(benchmark::State& state) {
  const auto rows = rsprune::random_unit_matrix(static_cast<std::size_t>(state.range(0)), 64, 3);
  rsprune::ClusterConfig cfg;
  cfg.k = 100;
  cfg.max_iters = 1;
  for (auto _ : state) benchmark::DoNotOptimize(rsprune::spherical_kmeans(rows.view(), cfg));
}
BENCHMARK(BM_KMeansIteration)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace
