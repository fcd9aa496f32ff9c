// End-to-end acceptance checks. One line per criterion:
//   PASS|FAIL <name> (<seconds>s): <detail>
// Exit status is non-zero if any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rsprune/assign.hpp"
#include "rsprune/bench.hpp"
#include "rsprune/cluster.hpp"
#include "rsprune/config.hpp"
#include "rsprune/entropy.hpp"
#include "rsprune/errors.hpp"
#include "rsprune/pipeline.hpp"
#include "rsprune/rng.hpp"
#include "rsprune/sample.hpp"
#include "rsprune/synthetic.hpp"
#include "rsprune/text_io.hpp"

using namespace rsprune;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Records the first failure; later checks only add context.
struct Checker {
  Outcome out;
  void check(bool ok, const std::string& what) {
    if (!ok && out.pass) {
      out.pass = false;
      out.detail = what;
    }
  }
};

int failures = 0;

void run(const char* name, double limit_seconds, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (o.pass && limit_seconds > 0 && secs > limit_seconds) {
    o = {false, "took " + format_fixed(secs, 1) + "s, limit " + format_fixed(limit_seconds, 0) + "s"};
  }
  if (!o.pass) ++failures;
  std::printf("%s %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", name, secs, o.detail.c_str());
  std::fflush(stdout);
}

std::uint32_t log_uniform_side(std::mt19937_64& gen) {
  // Sides spread evenly over 1..256 on a log scale.
  std::uniform_real_distribution<double> u(0.0, std::log(257.0));
  return std::min<std::uint32_t>(256, static_cast<std::uint32_t>(std::exp(u(gen))));
}

Outcome entropy_oracle() {
  Checker c;
  std::mt19937_64 gen(20240601);
  double worst = 0.0;
  const std::uint32_t band_choices[] = {1, 3, 4};
  std::size_t count = 0;
  for (int i = 0; i < 1000; ++i) {
    std::uint32_t w = log_uniform_side(gen), h = log_uniform_side(gen);
    if (i == 0) w = h = 1;
    if (i == 1) w = h = 256;
    const auto bands = band_choices[gen() % 3];
    const std::uint32_t max_value = gen() % 4 == 0 ? 65535 : 255;
    const auto img = oracle::random_raster(w, h, bands, max_value, gen());
    const double got = shannon_entropy(grayscale_histogram(img, {}));
    const double want = oracle::entropy_bits(img, 256, GrayscalePolicy::automatic);
    worst = std::max(worst, std::abs(got - want));
    ++count;
  }
  c.check(worst <= 1e-9, "max |error| " + format_exact(worst) + " bits");

  for (std::uint32_t bands : band_choices) {
    auto flat = make_raster(64, 32, bands);
    std::fill(flat.samples.begin(), flat.samples.end(), 137);
    const double h = shannon_entropy(grayscale_histogram(flat, {}));
    c.check(h == 0.0 && !std::signbit(h), "constant image gave " + format_exact(h));
  }
  for (std::uint32_t side : {16u, 256u}) {
    auto uni = make_raster(side, side, 1);
    for (std::size_t p = 0; p < uni.samples.size(); ++p) uni.samples[p] = static_cast<std::uint16_t>(p % 256);
    const double h = shannon_entropy(grayscale_histogram(uni, {}));
    c.check(h == 8.0, "uniform 256-level image gave " + format_exact(h));
  }
  if (c.out.pass) {
    c.out.detail = std::to_string(count) + " rasters, max |error| " + format_exact(worst) +
                   " bits; constant = 0, uniform = 8";
  }
  return c.out;
}

Outcome stage_one_rules() {
  Checker c;
  std::mt19937_64 gen(77);
  std::vector<EntropyScore> scores;
  std::set<std::string> seen;
  while (scores.size() < 10000) {
    auto id = "img" + std::to_string(gen() % 1000000);
    if (!seen.insert(id).second) continue;
    // Quarter-bit grid: heavy ties at every cut.
    scores.push_back({id, static_cast<double>(gen() % 33) / 4.0});
  }
  auto kept_ids = [&](const std::vector<bool>& keep) {
    std::set<std::string> out;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (keep[i]) out.insert(scores[i].id);
    }
    return out;
  };
  int cases = 0;
  for (double tau : {0.0, 1.0, 2.25, 4.0, 6.5, 7.75, 8.0, 8.5}) {
    EntropyConfig cfg;
    cfg.mode = EntropyMode::threshold;
    cfg.tau = tau;
    c.check(kept_ids(select_by_entropy(scores, cfg)) == oracle::threshold_keep(scores, tau),
            "threshold tau=" + format_exact(tau));
    ++cases;
  }
  for (const std::string p : {"0.0001", "0.01", "0.1", "0.15", "0.3", "0.333", "0.5", "0.7", "0.99", "1"}) {
    EntropyConfig cfg;
    cfg.keep_fraction = std::stod(p);
    const auto got = kept_ids(select_by_entropy(scores, cfg));
    const auto want = oracle::top_fraction_keep(scores, p);
    c.check(got == want, "top_fraction p=" + p + ": " + std::to_string(got.size()) + " vs " +
                             std::to_string(want.size()));
    ++cases;
  }
  if (c.out.pass) c.out.detail = std::to_string(cases) + " rule settings on 10000 tied scores match enumeration";
  return c.out;
}

Outcome kmeans_properties() {
  Checker c;
  std::mt19937_64 gen(5);
  double worst_drop = 0.0;
  std::size_t steps = 0;
  for (int inst = 0; inst < 100; ++inst) {
    SyntheticSpec s;
    s.n = 60 + gen() % 300;
    s.dim = 2 + static_cast<std::uint32_t>(gen() % 24);
    s.k_true = 1 + static_cast<std::uint32_t>(gen() % 8);
    s.spread = 0.2 + 0.6 * static_cast<double>(gen() % 100) / 100.0;
    s.noise_fraction = 0.1;
    s.seed = gen();
    const auto data = generate_synthetic(s);
    ClusterConfig cfg;
    cfg.k = 2 + static_cast<std::uint32_t>(gen() % 9);
    cfg.seed = gen();
    cfg.tol = 0.0;
    cfg.max_iters = 15;
    cfg.init = inst % 2 ? InitMethod::random_rows : InitMethod::kmeans_pp;
    const auto full = spherical_kmeans(data.matrix.view(), cfg);
    // Re-run with growing iteration caps; each prefix is the run's own iterate.
    long double prev = -1e300L;
    for (std::uint32_t t = 1; t <= full.meta.iterations; ++t) {
      cfg.max_iters = t;
      const auto step = spherical_kmeans(data.matrix.view(), cfg);
      const long double obj = oracle::objective(data.matrix.data(), step.data(), s.dim);
      // Float centroids carry ~1e-7 relative rounding per coordinate.
      const long double slack = 1e-6L * static_cast<long double>(s.n);
      worst_drop = std::max(worst_drop, static_cast<double>(prev - obj));
      c.check(obj >= prev - slack, "objective fell at instance " + std::to_string(inst) + " step " +
                                       std::to_string(t));
      prev = obj;
      ++steps;
    }
    for (std::size_t i = 1; i < full.meta.history.size(); ++i) {
      c.check(full.meta.history[i] >= full.meta.history[i - 1], "reported history fell at instance " +
                                                                   std::to_string(inst));
    }
  }

  SyntheticSpec blobs;
  blobs.n = 4000;
  blobs.dim = 32;
  blobs.k_true = 8;
  blobs.seed = 8;
  const auto data = generate_synthetic(blobs);
  ClusterConfig cfg;
  cfg.k = 8;
  cfg.seed = 1;
  std::vector<std::uint32_t> labels;
  spherical_kmeans(data.matrix.view(), cfg, 1, &labels);
  std::vector<std::int64_t> truth(data.labels.begin(), data.labels.end()), found(labels.begin(), labels.end());
  const double ari = oracle::ari_pairs(truth, found);
  c.check(ari >= 0.99, "8-blob ARI " + format_fixed(ari, 4));

  const auto rows = random_unit_matrix(40, 16, 3);
  ClusterConfig fixed;
  fixed.k = 40;
  const auto cent = spherical_kmeans(rows.view(), fixed);
  std::vector<std::uint32_t> l(40);
  std::vector<float> sims(40);
  assign_rows(rows.view(), cent, l, sims);
  bool fixed_point = std::set<std::uint32_t>(l.begin(), l.end()).size() == 40;
  for (std::size_t i = 0; i < 40 && fixed_point; ++i) {
    for (std::uint32_t j = 0; j < 16; ++j) fixed_point &= std::abs(cent.row(l[i])[j] - rows.row(i)[j]) <= 1e-6f;
  }
  c.check(fixed_point, "N = K run did not return the rows as centroids");

  if (c.out.pass) {
    c.out.detail = "100 instances / " + std::to_string(steps) + " iterations non-decreasing (max drop " +
                   format_exact(std::max(0.0, worst_drop)) + "); 8-blob ARI " + format_fixed(ari, 4) +
                   "; N = K fixed point";
  }
  return c.out;
}

Outcome assignment_oracle() {
  Checker c;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto rows = random_unit_matrix(1000, 64, seed, "x");
    const auto cents = random_unit_matrix(50, 64, seed + 100, "c");
    const CentroidSet cs(64, cents.data());
    const auto want = oracle::nearest_centroids(rows.data(), cents.data(), 64);
    for (unsigned workers : {1u, 4u}) {
      const auto got = assign_nearest(rows, cs, workers);
      c.check(got.labels == want.labels, "label mismatch, seed " + std::to_string(seed));
      for (std::size_t i = 0; i < got.size(); ++i) {
        worst = std::max(worst, std::abs(static_cast<double>(got.sims[i]) - want.sims_exact[i]));
      }
    }
  }
  c.check(worst <= 1e-5, "max |sim error| " + format_exact(worst));
  if (c.out.pass) c.out.detail = "5 instances of 1000x50x64, labels exact, max |sim error| " + format_exact(worst);
  return c.out;
}

Outcome sampling_oracle() {
  Checker c;
  std::mt19937_64 gen(99);
  int instances = 0, small_budget = 0, large_budget = 0;
  for (int t = 0; t < 600; ++t) {
    const std::size_t n = gen() % 101;
    const std::uint32_t k = 1 + static_cast<std::uint32_t>(gen() % 5);
    AssignmentTable table;
    table.k = k;
    std::vector<oracle::Candidate> cands;
    for (std::size_t i = 0; i < n; ++i) {
      const auto id = "s" + std::to_string(i * 7919 % 1009);
      const auto label = static_cast<std::uint32_t>(gen() % k);
      const float sim = static_cast<float>(static_cast<int>(gen() % 21) - 10) / 10.0f;
      table.ids.push_back(id);
      table.labels.push_back(label);
      table.sims.push_back(sim);
      cands.push_back({id, label, sim});
    }
    std::uint64_t budget;
    switch (t % 3) {
      case 0: budget = 1 + gen() % k; break;            // B <= K
      case 1: budget = n + gen() % 20; break;           // B >= N
      default: budget = 1 + gen() % (n + 1); break;
    }
    if (budget == 0) budget = 1;
    small_budget += budget < k;
    large_budget += budget >= n;
    const auto got = stratified_select(pool_by_cluster(table), {budget});
    std::set<std::string> ids;
    for (const auto& e : got.entries) ids.insert(e.id);
    c.check(ids == oracle::stratified(cands, k, budget), "id set differs on instance " + std::to_string(t));
    c.check(got.entries.size() == std::min<std::uint64_t>(budget, n),
            "|entries| != min(B, N) on instance " + std::to_string(t));
    ++instances;
  }
  if (c.out.pass) {
    c.out.detail = std::to_string(instances) + " instances (" + std::to_string(small_budget) + " with B<K, " +
                   std::to_string(large_budget) + " with B>=N) match the rule oracle";
  }
  return c.out;
}

Outcome determinism() {
  Checker c;
  oracle::TempDir dir("accept-det");
  SyntheticSpec spec;
  spec.n = 10000;
  spec.dim = 32;
  spec.k_true = 40;
  spec.imbalance = 1.0;
  spec.noise_fraction = 0.05;
  spec.seed = 6;
  const auto corpus = fixture::write_corpus(dir / "data", spec, 4000);
  std::string files[2];
  for (int i = 0; i < 2; ++i) {
    const std::string workers = i == 0 ? "1" : "8";
    const auto path = corpus.dir / ("w" + workers + ".conf");
    write_text_atomic(path, fixture::config_text(corpus, "paths.out_dir = out" + workers +
                                                             "\nentropy.keep_fraction = 0.3\n"
                                                             "sampling.pruning_ratio = 0.85\ncluster.k = 200\n"
                                                             "run.seed = 42\nrun.workers = " + workers + "\n"));
    const auto cfg = validate_config(path);
    run_pipeline(cfg);
    files[i] = oracle::read_file(cfg.paths.out_dir / outputs::kSelection);
  }
  c.check(!files[0].empty() && files[0] == files[1], "selection files differ between 1 and 8 workers");
  if (c.out.pass) {
    c.out.detail = "10000-sample pipeline, selection.tsv byte-identical at 1 and 8 workers (sha256 " +
                   sha256_hex(files[0]).substr(0, 12) + ")";
  }
  return c.out;
}

Outcome complexity() {
  Checker c;
  const std::vector<std::size_t> sizes{100000, 200000, 400000};
  const auto study = run_scaling_study(sizes, 200, 128, 17, 1, 5);
  const auto& f = study.assign_fit;
  c.check(f.slope >= 0.9 && f.slope <= 1.15, "assignment slope " + format_fixed(f.slope, 3));
  c.check(f.r2 >= 0.98, "assignment R^2 " + format_fixed(f.r2, 4));
  const std::vector<std::uint32_t> ks{200, 400};
  const auto t = time_assignment(200000, ks, 128, 18, 1, 5);
  const double ratio = t[1] / t[0];
  c.check(ratio >= 1.7 && ratio <= 2.3, "K-doubling ratio " + format_fixed(ratio, 3));
  if (c.out.pass) {
    c.out.detail = "slope " + format_fixed(f.slope, 3) + ", R^2 " + format_fixed(f.r2, 4) + ", K-doubling ratio " +
                   format_fixed(ratio, 3) + "; end-to-end slope " + format_fixed(study.end_to_end_fit.slope, 3);
  }
  return c.out;
}

Outcome clustering_routes() {
  Checker c;
  SyntheticSpec spec;
  spec.n = 1000000;
  spec.dim = 128;
  spec.k_true = 100;
  spec.imbalance = 1.0;
  spec.seed = 31;
  const auto corpus = generate_synthetic(spec);
  const std::vector<std::uint64_t> balanced(spec.k_true, 500);
  const auto reference = sample_components(corpus.means, spec.dim, balanced, spec.spread, 32, "r");
  ClusterConfig cfg;  // K = 200, max_iters = 100, tol = 1e-4 on both routes
  cfg.seed = 33;
  const auto budget = compute_budget(spec.n, 0.85, spec.n);
  const auto t = compare_clustering_routes(corpus.matrix, reference.matrix, cfg, budget, 1);
  const double ratio = t.reference_guided_seconds / t.full_corpus_seconds;
  c.check(t.reference_selected == budget && t.full_selected == budget, "a route missed the budget");
  c.check(ratio <= 0.25, "time ratio " + format_fixed(ratio, 4));
  if (c.out.pass) {
    c.out.detail = "1e6 rows, 5e4 reference, K=200: prior route " + format_fixed(t.reference_guided_seconds, 2) +
                   "s vs full corpus " + format_fixed(t.full_corpus_seconds, 2) + "s, ratio " +
                   format_fixed(ratio, 4);
  }
  return c.out;
}

Outcome strategy_recall() {
  Checker c;
  int wins = 0;
  double primary_sum = 0.0, random_sum = 0.0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t seed = derive_seed(2024, "trial." + std::to_string(t));
    SyntheticSpec spec;
    spec.n = 20000;
    spec.dim = 32;
    spec.k_true = 200;
    spec.imbalance = 1.5;
    spec.seed = seed;
    const auto corpus = generate_synthetic(spec);
    const std::vector<std::uint64_t> balanced(spec.k_true, 20);
    const auto reference = sample_components(corpus.means, spec.dim, balanced, spec.spread, seed + 1, "r");
    ClusterConfig cfg;
    cfg.k = 200;
    cfg.seed = derive_seed(seed, "cluster");
    const auto prior = spherical_kmeans(reference.matrix.view(), cfg);
    const auto cmp = compare_strategies(corpus, prior, compute_budget(spec.n, 0.85, spec.n), seed);
    const double p = cmp.get("primary").recall, r = cmp.get("random").recall;
    primary_sum += p;
    random_sum += r;
    wins += p > r;
  }
  c.check(wins >= 18, std::to_string(wins) + "/20 trials with higher recall than random");
  c.out.detail = std::to_string(wins) + "/20 trials beat random; mean recall " + format_fixed(primary_sum / trials, 4) +
                 " vs " + format_fixed(random_sum / trials, 4);
  return c.out;
}

Outcome shipped_config() {
  Checker c;
  const auto shipped = ConfigEntries::load(RSPRUNE_SHIPPED_CONFIG);
  const auto base = resolve_config(shipped, false);
  c.check(base.entropy.mode == EntropyMode::top_fraction && base.entropy.keep_fraction == 0.30,
          "stage-I keep fraction is not 0.30");
  c.check(base.pruning_ratio && *base.pruning_ratio == 0.85 && !base.budget, "overall pruning is not 0.85");
  c.check(base.cluster.k == 200, "K is not 200");
  c.check(base.strategy == "primary", "strategy is not primary");

  oracle::TempDir dir("accept-shipped");
  std::string sizes;
  for (std::size_t n : {1000u, 3333u, 10001u, 25000u}) {
    SyntheticSpec spec;
    spec.n = n;
    spec.dim = 24;
    spec.k_true = 30;
    spec.imbalance = 1.0;
    spec.seed = n;
    const auto corpus = fixture::write_corpus(dir / ("n" + std::to_string(n)), spec, 3000);
    ConfigEntries entries = shipped;
    entries.set("paths.manifest", corpus.manifest.string());
    entries.set("paths.embeddings", corpus.embeddings.string());
    entries.set("paths.reference", corpus.reference.string());
    entries.set("paths.scores", corpus.scores.string());
    entries.set("paths.out_dir", (corpus.dir / "out").string());
    const auto cfg = resolve_config(entries);
    const auto result = run_pipeline(cfg);
    const auto written = read_selection(cfg.paths.out_dir / outputs::kSelection);
    const auto want = static_cast<std::size_t>(std::llround(0.15 * static_cast<double>(n)));
    c.check(written.size() == want, "N=" + std::to_string(n) + ": " + std::to_string(written.size()) +
                                        " entries, expected " + std::to_string(want));
    sizes += (sizes.empty() ? "" : ", ") + std::to_string(n) + "->" + std::to_string(written.size());
    (void)result;
  }
  if (c.out.pass) c.out.detail = "keep 0.30, pruning 0.85, K=200; entries per N: " + sizes;
  return c.out;
}

}  // namespace

int main() {
  run("entropy_oracle", 30, entropy_oracle);
  run("stage1_rule_fidelity", 5, stage_one_rules);
  run("spherical_kmeans", 120, kmeans_properties);
  run("assignment_oracle", 10, assignment_oracle);
  run("sampling_oracle", 10, sampling_oracle);
  run("determinism_workers", 0, determinism);
  run("complexity_scaling", 300, complexity);
  run("reference_vs_full_clustering", 0, clustering_routes);
  run("strategy_recall_vs_random", 0, strategy_recall);
  run("shipped_config_budget", 0, shipped_config);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
