#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rsprune/bench.hpp"
#include "rsprune/errors.hpp"

using namespace rsprune;

TEST(Ari, MatchesPairCountOracle) {
  std::mt19937_64 gen(8);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + gen() % 60;
    std::vector<std::int64_t> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<std::int64_t>(gen() % 4);
      b[i] = t % 3 == 0 ? a[i] + 10 : static_cast<std::int64_t>(gen() % 5);
    }
    EXPECT_NEAR(adjusted_rand_index(a, b), oracle::ari_pairs(a, b), 1e-9);
  }
  const std::vector<std::int64_t> one(5, 0);
  EXPECT_EQ(adjusted_rand_index(one, one), 1.0);
}

TEST(Metrics, RecallCountsDistinctComponentsAndIgnoresNoise) {
  const std::vector<std::int32_t> labels{0, 0, 1, -1, 2};
  EXPECT_DOUBLE_EQ(component_recall(labels, std::vector<std::size_t>{0, 1, 3}, 3), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(component_recall(labels, std::vector<std::size_t>{0, 2, 4}, 3), 1.0);
}

TEST(Metrics, RedundancyOfIdenticalRowsIsOne) {
  EmbeddingMatrix m({"a", "b", "c"}, 2, {1, 0, 1, 0, 0, 1});
  EXPECT_NEAR(redundancy(m.view(), std::vector<std::size_t>{0, 1}), 1.0, 1e-7);
  EXPECT_NEAR(redundancy(m.view(), std::vector<std::size_t>{0, 2}), 0.0, 1e-7);
}

TEST(Fit, RecoversExactPowerLaw) {
  const std::vector<double> x{1e5, 2e5, 4e5, 8e5};
  std::vector<double> y;
  for (double v : x) y.push_back(3e-9 * std::pow(v, 1.2));
  const auto f = fit_loglog(x, y);
  EXPECT_NEAR(f.slope, 1.2, 1e-9);
  EXPECT_NEAR(f.r2, 1.0, 1e-9);
}

TEST(Scaling, SmallStudyIsWellFormed) {
  const std::vector<std::size_t> sizes{2000, 4000, 8000};
  const auto s = run_scaling_study(sizes, 16, 32, 1, 1, 1);
  ASSERT_EQ(s.points.size(), 3u);
  for (const auto& p : s.points) {
    EXPECT_GT(p.assign_seconds, 0.0);
    EXPECT_GE(p.end_to_end_seconds, p.assign_seconds * 0.5);
  }
  EXPECT_GT(s.assign_fit.slope, 0.3);
  EXPECT_THROW(run_scaling_study(std::vector<std::size_t>{10, 20}, 4, 8, 1), Error);
  EXPECT_THROW(run_scaling_study(std::vector<std::size_t>{10, 30, 20}, 4, 8, 1), Error);
}

TEST(Strategies, ComparisonReportsAllFour) {
  SyntheticSpec spec;
  spec.n = 3000;
  spec.dim = 16;
  spec.k_true = 12;
  spec.imbalance = 1.0;
  spec.seed = 2;
  const auto corpus = generate_synthetic(spec);
  const std::vector<std::uint64_t> balanced(12, 40);
  const auto ref = sample_components(corpus.means, 16, balanced, spec.spread, 3, "r");
  ClusterConfig cfg;
  cfg.k = 24;
  const auto prior = spherical_kmeans(ref.matrix.view(), cfg);
  const auto cmp = compare_strategies(corpus, prior, 300, 4);
  for (auto name : {"primary", "random", "moderate_ds", "cluster_nearest"}) {
    const auto& m = cmp.get(name);
    EXPECT_EQ(m.selected, 300u) << name;
    EXPECT_GT(m.recall, 0.0) << name;
    EXPECT_LE(m.recall, 1.0) << name;
  }
  EXPECT_THROW(cmp.get("nope"), Error);
  const auto report = to_report(cmp);
  EXPECT_FALSE(report.empty());
}

TEST(Routes, BothRoutesSelectTheBudget) {
  SyntheticSpec spec;
  spec.n = 4000;
  spec.dim = 16;
  spec.k_true = 6;
  spec.seed = 5;
  const auto corpus = generate_synthetic(spec);
  const std::vector<std::uint64_t> balanced(6, 50);
  const auto ref = sample_components(corpus.means, 16, balanced, spec.spread, 6, "r");
  ClusterConfig cfg;
  cfg.k = 6;
  const auto t = compare_clustering_routes(corpus.matrix, ref.matrix, cfg, 400);
  EXPECT_EQ(t.reference_selected, 400u);
  EXPECT_EQ(t.full_selected, 400u);
  EXPECT_GT(t.full_corpus_seconds, 0.0);
}
