#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rsprune/assign.hpp"
#include "rsprune/baselines.hpp"
#include "rsprune/bench.hpp"
#include "rsprune/config.hpp"
#include "rsprune/errors.hpp"
#include "rsprune/pipeline.hpp"
#include "rsprune/rng.hpp"
#include "rsprune/sample.hpp"
#include "rsprune/synthetic.hpp"

namespace {

using namespace rsprune;

// Flags that mirror config keys.
const std::vector<std::pair<std::string, std::string>> kKeyFlags = {
    {"--manifest", "paths.manifest"},
    {"--embeddings", "paths.embeddings"},
    {"--reference", "paths.reference"},
    {"--scores", "paths.scores"},
    {"--out-dir", "paths.out_dir"},
    {"--mode", "entropy.mode"},
    {"--keep-fraction", "entropy.keep_fraction"},
    {"--tau", "entropy.tau"},
    {"--levels", "entropy.levels"},
    {"--grayscale", "entropy.grayscale"},
    {"--k", "cluster.k"},
    {"--max-iters", "cluster.max_iters"},
    {"--tol", "cluster.tol"},
    {"--init", "cluster.init"},
    {"--pruning-ratio", "sampling.pruning_ratio"},
    {"--budget", "sampling.budget"},
    {"--strategy", "run.strategy"},
    {"--seed", "run.seed"},
    {"--workers", "run.workers"},
};

struct Options {
  std::string config;
  std::map<std::string, std::string> flags;
  std::vector<std::string> sets;

  // Stage-specific inputs.
  std::string centroids;
  std::string assignments;
  std::optional<std::uint64_t> n_original;

  // bench
  std::vector<std::size_t> sizes{100000, 200000, 400000};
  std::uint32_t dim = 128;
  unsigned repeats = 3;
  std::size_t n = 20000;
  std::size_t reference_n = 50000;
  std::uint32_t k_true = 50;
  double imbalance = 1.0;
  double noise = 0.0;
  unsigned trials = 1;
};

PipelineConfig resolve(const Options& o, bool require_sampling) {
  ConfigEntries entries;
  if (!o.config.empty()) entries = ConfigEntries::load(o.config);
  for (const auto& [key, value] : o.flags) entries.set(key, value);
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(ErrorKind::config, "--set expects key=value, got '" + s + "'");
    entries.set(std::string(trim(std::string_view(s).substr(0, eq))),
                std::string(trim(std::string_view(s).substr(eq + 1))));
  }
  return resolve_config(entries, true, require_sampling);
}

fs::path or_default(const std::string& given, const PipelineConfig& c, const char* name) {
  return given.empty() ? c.paths.out_dir / name : fs::path(given);
}

void print_selection_summary(const SelectionResult& s, std::uint64_t budget, const fs::path& path) {
  std::printf("selected %zu (budget %llu, reallocated %llu) -> %s\n", s.entries.size(),
              static_cast<unsigned long long>(budget), static_cast<unsigned long long>(s.reallocated_count),
              path.string().c_str());
}

int cmd_entropy(const Options& o) {
  const auto cfg = resolve(o, false);
  const auto r = run_entropy_stage(cfg);
  std::printf("stage I: kept %zu of %zu%s -> %s\n", r.kept.size(), r.n_original, r.skipped ? " (cached)" : "",
              (cfg.paths.out_dir / outputs::kKeptManifest).string().c_str());
  return 0;
}

int cmd_cluster(const Options& o) {
  const auto cfg = resolve(o, false);
  bool skipped = false;
  const auto c = run_cluster_stage(cfg, &skipped);
  std::printf("centroids: k=%zu dim=%u iterations=%u objective=%.6f%s -> %s\n", c.k(), c.dim(), c.meta.iterations,
              c.meta.objective, skipped ? " (cached)" : "",
              (cfg.paths.out_dir / outputs::kCentroids).string().c_str());
  return 0;
}

EmbeddingMatrix candidate_rows(const PipelineConfig& cfg) {
  if (cfg.paths.embeddings.empty()) fail(ErrorKind::config, "paths.embeddings is required");
  if (cfg.paths.manifest.empty()) return read_embeddings(cfg.paths.embeddings);
  return join_embeddings(cfg.paths.embeddings, load_manifest(cfg.paths.manifest));
}

int cmd_assign(const Options& o) {
  const auto cfg = resolve(o, false);
  const auto centroids_path = or_default(o.centroids, cfg, outputs::kCentroids);
  const auto centroids = load_centroids(centroids_path);
  const auto rows = candidate_rows(cfg);
  std::vector<fs::path> inputs{cfg.paths.embeddings, centroids_path};
  bool skipped = false;
  const auto table = run_assign_stage(cfg, rows, centroids, inputs, &skipped);
  std::printf("assigned %zu rows to %u clusters%s -> %s\n", table.size(), table.k, skipped ? " (cached)" : "",
              (cfg.paths.out_dir / outputs::kAssignments).string().c_str());
  return 0;
}

AssignmentTable load_table(const Options& o, const PipelineConfig& cfg) {
  const auto path = or_default(o.assignments, cfg, outputs::kAssignmentCache);
  if (path.extension() == ".tsv") return read_assignments(path, cfg.cluster.k);
  return read_assignment_cache(path);
}

void write_outputs(const PipelineConfig& cfg, const SelectionResult& s, std::uint64_t budget) {
  fs::create_directories(cfg.paths.out_dir);
  const auto path = cfg.paths.out_dir / outputs::kSelection;
  write_selection(s.entries, path);
  write_selection_stats(s, cfg.paths.out_dir / outputs::kSelectionStats,
                        {{"strategy", cfg.strategy}, {"budget", std::to_string(budget)}});
  print_selection_summary(s, budget, path);
}

int cmd_sample(const Options& o) {
  const auto cfg = resolve(o, true);
  const auto table = load_table(o, cfg);
  const std::uint64_t n = table.size();
  const auto budget = resolve_budget(cfg, n, o.n_original.value_or(n));
  const auto s = stratified_select(pool_by_cluster(table, cfg.workers), SamplingConfig{budget});
  write_outputs(cfg, s, budget);
  return 0;
}

int cmd_baseline(const Options& o) {
  auto cfg = resolve(o, true);
  if (cfg.strategy == kStrategyPrimary) fail(ErrorKind::config, "--strategy must name a baseline");
  const auto strategy = parse_baseline(cfg.strategy);
  SelectionResult s;
  std::uint64_t budget = 0;
  switch (strategy) {
    case BaselineStrategy::random: {
      if (cfg.paths.manifest.empty()) fail(ErrorKind::config, "paths.manifest is required");
      const auto manifest = load_manifest(cfg.paths.manifest);
      budget = resolve_budget(cfg, manifest.size(), o.n_original.value_or(manifest.size()));
      s = random_select(manifest, budget, derive_seed(cfg.seed, "baseline.random"));
      break;
    }
    case BaselineStrategy::moderate_ds: {
      const auto table = load_table(o, cfg);
      if (cfg.paths.embeddings.empty()) fail(ErrorKind::config, "paths.embeddings is required");
      DatasetManifest order;
      for (const auto& id : table.ids) {
        SampleRecord r;
        r.id = id;
        order.add(std::move(r));
      }
      const auto rows = join_embeddings(cfg.paths.embeddings, order);
      budget = resolve_budget(cfg, table.size(), o.n_original.value_or(table.size()));
      s = moderate_ds_select(rows, table, budget);
      break;
    }
    case BaselineStrategy::cluster_nearest: {
      const auto rows = candidate_rows(cfg);
      budget = resolve_budget(cfg, rows.rows(), o.n_original.value_or(rows.rows()));
      ClusterConfig own = cfg.cluster;
      own.seed = derive_seed(cfg.seed, "baseline.cluster_nearest");
      s = cluster_nearest_select(rows, own, budget, cfg.workers);
      break;
    }
  }
  write_outputs(cfg, s, budget);
  return 0;
}

int cmd_bench_scaling(const Options& o) {
  const auto cfg = resolve(o, false);
  fs::create_directories(cfg.paths.out_dir);
  const auto study = run_scaling_study(o.sizes, cfg.cluster.k, o.dim, cfg.seed, cfg.workers, o.repeats);
  for (const auto& p : study.points) {
    std::printf("n=%zu assign=%.4fs end_to_end=%.4fs\n", p.n, p.assign_seconds, p.end_to_end_seconds);
  }
  std::printf("assign log-log slope %.3f (r2 %.4f); end-to-end slope %.3f (r2 %.4f)\n", study.assign_fit.slope,
              study.assign_fit.r2, study.end_to_end_fit.slope, study.end_to_end_fit.r2);
  const std::vector<std::uint32_t> ks{cfg.cluster.k, 2 * cfg.cluster.k};
  const auto by_k = time_assignment(o.sizes[o.sizes.size() / 2], ks, o.dim, cfg.seed, cfg.workers, o.repeats);
  std::printf("K-doubling time ratio %.3f (K=%u vs %u)\n", by_k[1] / by_k[0], ks[1], ks[0]);
  auto report = to_report(study);
  report.emplace_back("k_doubling_ratio", format_fixed(by_k[1] / by_k[0], 6));
  write_scaling_csv(study, cfg.paths.out_dir / "scaling.csv");
  write_report(report, cfg.paths.out_dir / "scaling_report.tsv");
  return 0;
}

int cmd_bench_compare(const Options& o) {
  const auto cfg = resolve(o, false);
  fs::create_directories(cfg.paths.out_dir);
  const double ratio = cfg.pruning_ratio.value_or(0.85);
  KeyValues all;
  for (unsigned t = 0; t < std::max(1u, o.trials); ++t) {
    const auto trial_seed = derive_seed(cfg.seed, "bench.trial." + std::to_string(t));
    SyntheticSpec spec;
    spec.n = o.n;
    spec.dim = o.dim;
    spec.k_true = o.k_true;
    spec.imbalance = o.imbalance;
    spec.noise_fraction = o.noise;
    spec.seed = trial_seed;
    const auto corpus = generate_synthetic(spec);
    const std::vector<std::uint64_t> balanced(o.k_true, std::max<std::uint64_t>(1, o.reference_n / o.k_true));
    const auto reference =
        sample_components(corpus.means, o.dim, balanced, spec.spread, derive_seed(trial_seed, "reference"), "r");
    ClusterConfig cc = cfg.cluster;
    cc.seed = derive_seed(trial_seed, "cluster");
    const auto prior = spherical_kmeans(reference.matrix.view(), cc, cfg.workers);
    const auto budget = cfg.budget.value_or(compute_budget(o.n, ratio, o.n));
    const auto cmp = compare_strategies(corpus, prior, budget, trial_seed, cfg.workers);
    std::printf("trial %u (budget %llu)\n", t, static_cast<unsigned long long>(budget));
    for (const auto& s : cmp.strategies) {
      std::printf("  %-16s recall %.4f redundancy %.4f time %.3fs\n", s.name.c_str(), s.recall, s.redundancy,
                  s.seconds);
    }
    for (auto [k, v] : to_report(cmp)) all.emplace_back("trial." + std::to_string(t) + "." + k, v);
  }
  write_report(all, cfg.paths.out_dir / "strategy_report.tsv");
  return 0;
}

int cmd_bench_routes(const Options& o) {
  const auto cfg = resolve(o, false);
  fs::create_directories(cfg.paths.out_dir);
  SyntheticSpec spec;
  spec.n = o.n;
  spec.dim = o.dim;
  spec.k_true = o.k_true;
  spec.imbalance = o.imbalance;
  spec.seed = derive_seed(cfg.seed, "bench.routes");
  const auto corpus = generate_synthetic(spec);
  const std::vector<std::uint64_t> balanced(o.k_true, std::max<std::uint64_t>(1, o.reference_n / o.k_true));
  const auto reference = sample_components(corpus.means, o.dim, balanced, spec.spread,
                                           derive_seed(spec.seed, "reference"), "r");
  const auto budget = cfg.budget.value_or(compute_budget(o.n, cfg.pruning_ratio.value_or(0.85), o.n));
  const auto t = compare_clustering_routes(corpus.matrix, reference.matrix, cfg.cluster, budget, cfg.workers);
  std::printf("reference-guided %.3fs (%u iterations), full-corpus %.3fs (%u iterations), ratio %.4f\n",
              t.reference_guided_seconds, t.reference_iterations, t.full_corpus_seconds, t.full_iterations,
              t.reference_guided_seconds / t.full_corpus_seconds);
  write_report({{"n", std::to_string(o.n)},
                {"reference_n", std::to_string(reference.matrix.rows())},
                {"k", std::to_string(cfg.cluster.k)},
                {"max_iters", std::to_string(cfg.cluster.max_iters)},
                {"reference_guided_seconds", format_fixed(t.reference_guided_seconds, 6)},
                {"full_corpus_seconds", format_fixed(t.full_corpus_seconds, 6)},
                {"ratio", format_fixed(t.reference_guided_seconds / t.full_corpus_seconds, 6)}},
               cfg.paths.out_dir / "routes_report.tsv");
  return 0;
}

int cmd_pipeline(const Options& o) {
  const auto cfg = resolve(o, true);
  require_pipeline_inputs(cfg);
  const auto run = run_pipeline(cfg);
  std::printf("corpus %llu, stage I kept %llu, budget %llu\n", static_cast<unsigned long long>(run.n_original),
              static_cast<unsigned long long>(run.n_after_stage1), static_cast<unsigned long long>(run.budget));
  for (const auto& s : run.skipped_stages) std::printf("reused completed stage: %s\n", s.c_str());
  print_selection_summary(run.selection, run.budget, cfg.paths.out_dir / outputs::kSelection);
  return 0;
}

int cmd_validate(const Options& o) {
  const auto cfg = resolve(o, true);
  require_pipeline_inputs(cfg);
  std::fputs(validation_report(cfg).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rsprune: entropy filtering and reference-guided cluster sampling for image corpora"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;

  app.add_option("--config", o.config, "Config file (section.key = value)");
  for (const auto& [flag, key] : kKeyFlags) {
    app.add_option_function<std::string>(
        flag, [&o, key = key](const std::string& v) { o.flags[key] = v; }, "Sets " + key);
  }
  app.add_option("--set", o.sets, "Sets any config key: --set section.key=value");

  auto* entropy = app.add_subcommand("entropy", "Stage I: score images and keep the most informative");
  auto* cluster = app.add_subcommand("cluster", "Build prior centroids from reference embeddings");
  auto* assign = app.add_subcommand("assign", "Assign embeddings to their nearest centroid");
  assign->add_option("--centroids", o.centroids, "Centroid file (default <out-dir>/centroids.bin)");
  auto* sample = app.add_subcommand("sample", "Stage II stratified selection from an assignment table");
  sample->add_option("--assignments", o.assignments, "assignments.bin or assignments.tsv");
  sample->add_option("--n-original", o.n_original, "Corpus size before stage I (for --pruning-ratio)");
  auto* baseline = app.add_subcommand("baseline", "Run a baseline strategy (random, moderate_ds, cluster_nearest)");
  baseline->add_option("--assignments", o.assignments, "Assignment table for moderate_ds");
  baseline->add_option("--n-original", o.n_original, "Corpus size before stage I (for --pruning-ratio)");

  auto* bench = app.add_subcommand("bench", "Complexity and strategy benchmarks on synthetic data");
  bench->require_subcommand(1);
  auto* scaling = bench->add_subcommand("scaling", "Stage-II time versus N with fixed priors");
  scaling->add_option("--sizes", o.sizes, "Corpus sizes")->delimiter(',');
  scaling->add_option("--dim", o.dim, "Embedding dimension");
  scaling->add_option("--repeats", o.repeats, "Timing repeats (minimum is reported)");
  auto* compare = bench->add_subcommand("compare", "Primary method versus baselines on Zipf corpora");
  compare->add_option("--n", o.n, "Corpus size");
  compare->add_option("--dim", o.dim, "Embedding dimension");
  compare->add_option("--k-true", o.k_true, "Generating components");
  compare->add_option("--imbalance", o.imbalance, "Zipf exponent of component sizes");
  compare->add_option("--noise", o.noise, "Fraction of unstructured rows");
  compare->add_option("--reference-n", o.reference_n, "Balanced reference set size");
  compare->add_option("--trials", o.trials, "Independent seeded trials");
  auto* routes = bench->add_subcommand("routes", "Prior centroids versus clustering the full corpus");
  routes->add_option("--n", o.n, "Corpus size");
  routes->add_option("--dim", o.dim, "Embedding dimension");
  routes->add_option("--k-true", o.k_true, "Generating components");
  routes->add_option("--imbalance", o.imbalance, "Zipf exponent of component sizes");
  routes->add_option("--reference-n", o.reference_n, "Reference set size");

  auto* pipeline = app.add_subcommand("pipeline", "Run stage I and stage II end to end");
  auto* validate = app.add_subcommand("validate", "Resolve a config and report applied defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*entropy) return cmd_entropy(o);
    if (*cluster) return cmd_cluster(o);
    if (*assign) return cmd_assign(o);
    if (*sample) return cmd_sample(o);
    if (*baseline) return cmd_baseline(o);
    if (*scaling) return cmd_bench_scaling(o);
    if (*compare) return cmd_bench_compare(o);
    if (*routes) return cmd_bench_routes(o);
    if (*pipeline) return cmd_pipeline(o);
    if (*validate) return cmd_validate(o);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
