#include "rsprune/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "rsprune/assign.hpp"
#include "rsprune/baselines.hpp"
#include "rsprune/errors.hpp"
#include "rsprune/rng.hpp"
#include "rsprune/similarity.hpp"

namespace rsprune {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double choose2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

double adjusted_rand_index(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
  if (a.size() != b.size()) fail(ErrorKind::precondition, "label vectors differ in length");
  const double n = static_cast<double>(a.size());
  if (a.size() < 2) return 1.0;
  std::map<std::pair<std::int64_t, std::int64_t>, std::uint64_t> joint;
  std::map<std::int64_t, std::uint64_t> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++joint[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [_, c] : joint) index += choose2(static_cast<double>(c));
  for (const auto& [_, c] : rows) sum_a += choose2(static_cast<double>(c));
  for (const auto& [_, c] : cols) sum_b += choose2(static_cast<double>(c));
  const double expected = sum_a * sum_b / choose2(n);
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

double component_recall(std::span<const std::int32_t> true_labels, std::span<const std::size_t> selected,
                        std::uint32_t k_true) {
  if (k_true == 0) return 0.0;
  std::vector<char> hit(k_true, 0);
  for (auto r : selected) {
    const auto l = true_labels[r];
    if (l >= 0 && static_cast<std::uint32_t>(l) < k_true) hit[static_cast<std::size_t>(l)] = 1;
  }
  return static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / k_true;
}

double redundancy(MatrixView m, std::span<const std::size_t> selected) {
  if (selected.size() < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    float best = -2.0f;
    const auto x = m.row(selected[i]);
    for (std::size_t j = 0; j < selected.size(); ++j) {
      if (i == j) continue;
      best = std::max(best, dot_sequential(x, m.row(selected[j])));
    }
    total += best;
  }
  return total / static_cast<double>(selected.size());
}

std::vector<std::size_t> selected_rows(const EmbeddingMatrix& m, const SelectionResult& selection) {
  const auto index = build_id_index(m.ids());
  std::vector<std::size_t> rows;
  rows.reserve(selection.entries.size());
  for (const auto& e : selection.entries) {
    auto it = index.find(e.id);
    if (it == index.end()) fail(ErrorKind::precondition, "selected id '" + e.id + "' not in matrix");
    rows.push_back(it->second);
  }
  return rows;
}

LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) fail(ErrorKind::precondition, "need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0 && y[i] > 0)) fail(ErrorKind::precondition, "log-log fit needs positive values");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

namespace {

CentroidSet random_centroids(std::uint32_t k, std::uint32_t dim, std::uint64_t seed) {
  auto m = random_unit_matrix(k, dim, seed, "c");
  return CentroidSet(dim, m.data());
}

// Seconds for assign + pool + select at a 15% budget.
double time_stage_two(const EmbeddingMatrix& rows, const CentroidSet& c, unsigned workers) {
  const auto t0 = Clock::now();
  auto table = assign_nearest(rows, c, workers);
  auto pools = pool_by_cluster(table, workers);
  SamplingConfig cfg;
  cfg.budget = std::max<std::uint64_t>(1, rows.rows() * 15 / 100);
  auto selection = stratified_select(pools, cfg);
  const double secs = seconds_since(t0);
  if (selection.entries.size() != std::min<std::uint64_t>(cfg.budget, rows.rows())) {
    fail(ErrorKind::precondition, "stage II returned an unexpected selection size");
  }
  return secs;
}

}  // namespace

ScalingStudy run_scaling_study(std::span<const std::size_t> sizes, std::uint32_t k, std::uint32_t dim,
                               std::uint64_t seed, unsigned workers, unsigned repeats) {
  if (sizes.size() < 3) fail(ErrorKind::config, "scaling study needs at least 3 sizes");
  if (!std::is_sorted(sizes.begin(), sizes.end()) ||
      std::adjacent_find(sizes.begin(), sizes.end()) != sizes.end()) {
    fail(ErrorKind::config, "scaling sizes must be strictly increasing");
  }
  repeats = std::max(1u, repeats);
  const auto centroids = random_centroids(k, dim, derive_seed(seed, "bench.centroids"));
  const auto all = random_unit_matrix(sizes.back(), dim, derive_seed(seed, "bench.rows"));

  ScalingStudy study;
  study.k = k;
  study.dim = dim;
  std::vector<EmbeddingMatrix> rows;
  for (auto n : sizes) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    rows.push_back(all.select_rows(idx));
    ScalingPoint p;
    p.n = n;
    p.assign_seconds = p.end_to_end_seconds = std::numeric_limits<double>::infinity();
    study.points.push_back(p);
  }
  // Round-robin over sizes so a slow patch on a shared machine hits every
  // size rather than one.
  for (unsigned r = 0; r < repeats; ++r) {
    for (std::size_t s = 0; s < sizes.size(); ++s) {
      auto& p = study.points[s];
      std::vector<std::uint32_t> labels(p.n);
      std::vector<float> sims(p.n);
      const auto t0 = Clock::now();
      assign_rows(rows[s].view(), centroids, labels, sims, workers);
      p.assign_seconds = std::min(p.assign_seconds, seconds_since(t0));
      p.end_to_end_seconds = std::min(p.end_to_end_seconds, time_stage_two(rows[s], centroids, workers));
    }
  }
  std::vector<double> x, ya, ye;
  for (const auto& p : study.points) {
    x.push_back(static_cast<double>(p.n));
    ya.push_back(p.assign_seconds);
    ye.push_back(p.end_to_end_seconds);
  }
  study.assign_fit = fit_loglog(x, ya);
  study.end_to_end_fit = fit_loglog(x, ye);
  return study;
}

std::vector<double> time_assignment(std::size_t n, std::span<const std::uint32_t> ks, std::uint32_t dim,
                                    std::uint64_t seed, unsigned workers, unsigned repeats) {
  const auto rows = random_unit_matrix(n, dim, derive_seed(seed, "bench.rows"));
  std::vector<CentroidSet> sets;
  for (auto k : ks) sets.push_back(random_centroids(k, dim, derive_seed(seed, "bench.centroids")));
  std::vector<std::uint32_t> labels(n);
  std::vector<float> sims(n);
  std::vector<double> best(ks.size(), std::numeric_limits<double>::infinity());
  for (unsigned r = 0; r < std::max(1u, repeats); ++r) {
    for (std::size_t i = 0; i < sets.size(); ++i) {
      const auto t0 = Clock::now();
      assign_rows(rows.view(), sets[i], labels, sims, workers);
      best[i] = std::min(best[i], seconds_since(t0));
    }
  }
  return best;
}

RouteTiming compare_clustering_routes(const EmbeddingMatrix& corpus, const EmbeddingMatrix& reference,
                                      const ClusterConfig& config, std::uint64_t budget, unsigned workers) {
  RouteTiming out;
  SamplingConfig sampling;
  sampling.budget = budget;
  {
    const auto t0 = Clock::now();
    const auto prior = spherical_kmeans(reference.view(), config, workers);
    const auto table = assign_nearest(corpus, prior, workers);
    const auto selection = stratified_select(pool_by_cluster(table, workers), sampling);
    out.reference_guided_seconds = seconds_since(t0);
    out.reference_iterations = prior.meta.iterations;
    out.reference_selected = selection.entries.size();
  }
  {
    const auto t0 = Clock::now();
    AssignmentTable table;
    const auto centroids = spherical_kmeans(corpus.view(), config, workers, &table.labels, &table.sims);
    table.ids = corpus.ids();
    table.k = static_cast<std::uint32_t>(centroids.k());
    const auto selection = stratified_select(pool_by_cluster(table, workers), sampling);
    out.full_corpus_seconds = seconds_since(t0);
    out.full_iterations = centroids.meta.iterations;
    out.full_selected = selection.entries.size();
  }
  return out;
}

const StrategyMetrics& StrategyComparison::get(std::string_view name) const {
  for (const auto& s : strategies) {
    if (s.name == name) return s;
  }
  fail(ErrorKind::precondition, "no strategy named '" + std::string(name) + "'");
}

StrategyComparison compare_strategies(const SyntheticCorpus& corpus, const CentroidSet& prior,
                                      std::uint64_t budget, std::uint64_t seed, unsigned workers) {
  const auto& m = corpus.matrix;
  const auto k_true = static_cast<std::uint32_t>(corpus.component_sizes.size());
  StrategyComparison out;
  out.budget = budget;

  auto record = [&](std::string name, Clock::time_point t0, const SelectionResult& sel) {
    const double secs = seconds_since(t0);
    const auto rows = selected_rows(m, sel);
    StrategyMetrics s;
    s.name = std::move(name);
    s.seconds = secs;
    s.selected = rows.size();
    s.recall = component_recall(corpus.labels, rows, k_true);
    s.redundancy = redundancy(m.view(), rows);
    out.strategies.push_back(std::move(s));
  };

  auto t0 = Clock::now();
  const auto table = assign_nearest(m, prior, workers);
  {
    SamplingConfig cfg;
    cfg.budget = budget;
    record("primary", t0, stratified_select(pool_by_cluster(table, workers), cfg));
  }

  t0 = Clock::now();
  {
    DatasetManifest manifest;
    for (const auto& id : m.ids()) {
      SampleRecord r;
      r.id = id;
      manifest.add(std::move(r));
    }
    record("random", t0, random_select(manifest, budget, derive_seed(seed, "baseline.random")));
  }

  t0 = Clock::now();
  record("moderate_ds", t0, moderate_ds_select(m, table, budget));

  t0 = Clock::now();
  ClusterConfig own;
  own.k = static_cast<std::uint32_t>(prior.k());
  own.seed = derive_seed(seed, "baseline.cluster_nearest");
  record("cluster_nearest", t0, cluster_nearest_select(m, own, budget, workers));
  return out;
}

KeyValues to_report(const ScalingStudy& study) {
  KeyValues kv;
  kv.emplace_back("k", std::to_string(study.k));
  kv.emplace_back("dim", std::to_string(study.dim));
  for (const auto& p : study.points) {
    const auto n = std::to_string(p.n);
    kv.emplace_back("n." + n + ".assign_seconds", format_fixed(p.assign_seconds, 6));
    kv.emplace_back("n." + n + ".end_to_end_seconds", format_fixed(p.end_to_end_seconds, 6));
  }
  kv.emplace_back("assign.loglog_slope", format_fixed(study.assign_fit.slope, 4));
  kv.emplace_back("assign.r2", format_fixed(study.assign_fit.r2, 4));
  kv.emplace_back("end_to_end.loglog_slope", format_fixed(study.end_to_end_fit.slope, 4));
  kv.emplace_back("end_to_end.r2", format_fixed(study.end_to_end_fit.r2, 4));
  return kv;
}

KeyValues to_report(const StrategyComparison& comparison) {
  KeyValues kv;
  kv.emplace_back("budget", std::to_string(comparison.budget));
  for (const auto& s : comparison.strategies) {
    kv.emplace_back(s.name + ".selected", std::to_string(s.selected));
    kv.emplace_back(s.name + ".component_recall", format_fixed(s.recall, 6));
    kv.emplace_back(s.name + ".redundancy", format_fixed(s.redundancy, 6));
    kv.emplace_back(s.name + ".seconds", format_fixed(s.seconds, 6));
  }
  return kv;
}

void write_report(const KeyValues& report, const std::filesystem::path& path) { write_key_values(path, report); }

void write_scaling_csv(const ScalingStudy& study, const std::filesystem::path& path) {
  std::string text = "n,assign_seconds,end_to_end_seconds\n";
  for (const auto& p : study.points) {
    text += std::to_string(p.n) + "," + format_fixed(p.assign_seconds, 6) + "," +
            format_fixed(p.end_to_end_seconds, 6) + "\n";
  }
  write_text_atomic(path, text);
}

}  // namespace rsprune
