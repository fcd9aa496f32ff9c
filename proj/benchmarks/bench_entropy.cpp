#include <benchmark/benchmark.h>

#include "rsprune/entropy.hpp"
#include "rsprune/rng.hpp"

namespace {

rsprune::Raster noise_image(std::uint32_t side, std::uint32_t bands) {
  rsprune::Rng rng(side * 10 + bands);
  auto r = rsprune::make_raster(side, side, bands);
  for (auto& s : r.samples) s = static_cast<std::uint16_t>(rng.below(256));
  return r;
}

void BM_Entropy(benchmark::State& state) {
  const auto img = noise_image(static_cast<std::uint32_t>(state.range(0)), static_cast<std::uint32_t>(state.range(1)));
  const rsprune::EntropyConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rsprune::shannon_entropy(rsprune::grayscale_histogram(img, cfg)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(img.pixel_count()));
}
BENCHMARK(BM_Entropy)->Args({256, 1})->Args({256, 3})->Args({512, 3})->Args({512, 4});

void BM_TopFraction(benchmark::State& state) {
  rsprune::Rng rng(1);
  std::vector<rsprune::EntropyScore> scores(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = {"id" + std::to_string(i), 8.0 * rng.uniform()};
  rsprune::EntropyConfig cfg;
  cfg.keep_fraction = 0.3;
  for (auto _ : state) benchmark::DoNotOptimize(rsprune::select_by_entropy(scores, cfg));
}
BENCHMARK(BM_TopFraction)->Arg(10000)->Arg(1000000);

}  // namespace
