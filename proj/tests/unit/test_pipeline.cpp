#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rsprune/errors.hpp"
#include "rsprune/pipeline.hpp"
#include "rsprune/raster.hpp"
#include "rsprune/text_io.hpp"

using namespace rsprune;

namespace {

struct Workspace {
  oracle::TempDir dir{"pipeline"};
  fixture::Corpus corpus;

  explicit Workspace(std::size_t n = 2000) {
    SyntheticSpec spec;
    spec.n = n;
    spec.dim = 16;
    spec.k_true = 8;
    spec.imbalance = 1.0;
    spec.seed = 21;
    corpus = fixture::write_corpus(dir / "data", spec, 400);
  }

  PipelineConfig config(const std::string& extra, const std::string& out = "run") {
    const auto path = corpus.dir / ("c-" + out + ".conf");
    write_text_atomic(path, fixture::config_text(corpus, "paths.out_dir = " + out + "\ncluster.k = 10\n" + extra));
    return validate_config(path);
  }
};

std::string selection_of(const PipelineConfig& cfg) {
  return oracle::read_file(cfg.paths.out_dir / outputs::kSelection);
}

}  // namespace

TEST(Pipeline, ProducesBudgetedSelectionAndSidecars) {
  Workspace s;
  const auto cfg = s.config("entropy.keep_fraction = 0.3\nsampling.pruning_ratio = 0.85\n");
  const auto run = run_pipeline(cfg);
  EXPECT_EQ(run.n_original, 2000u);
  EXPECT_EQ(run.n_after_stage1, 600u);
  EXPECT_EQ(run.budget, 300u);
  EXPECT_EQ(run.selection.entries.size(), 300u);
  const auto entries = read_selection(cfg.paths.out_dir / outputs::kSelection);
  ASSERT_EQ(entries.size(), 300u);
  validate_selection(entries, load_manifest(s.corpus.manifest));
  for (const auto& e : entries) EXPECT_TRUE(e.entropy_bits.has_value());
  for (auto f : {outputs::kKeptManifest, outputs::kScores, outputs::kCentroids, outputs::kAssignments,
                 outputs::kSelectionStats, outputs::kRunMeta}) {
    EXPECT_TRUE(fs::exists(cfg.paths.out_dir / f)) << f;
  }
  const auto stats = read_key_values(cfg.paths.out_dir / outputs::kSelectionStats);
  EXPECT_EQ(stats[0], (std::pair<std::string, std::string>{"strategy", "primary"}));
}

TEST(Pipeline, ResumedRunEqualsFreshRun) {
  Workspace s;
  const std::string extra = "entropy.keep_fraction = 0.5\nsampling.budget = 250\n";
  const auto a = s.config(extra, "a");
  const auto first = run_pipeline(a);
  EXPECT_TRUE(first.skipped_stages.empty());
  const auto fresh = selection_of(a);
  const auto again = run_pipeline(a);
  EXPECT_EQ(again.skipped_stages, (std::vector<std::string>{"entropy", "cluster", "assign"}));
  EXPECT_EQ(selection_of(a), fresh);

  // A changed input invalidates the downstream markers.
  const auto b = s.config("entropy.keep_fraction = 0.6\nsampling.budget = 250\n", "a");
  const auto changed = run_pipeline(b);
  EXPECT_EQ(changed.skipped_stages, (std::vector<std::string>{"cluster"}));
  const auto c = s.config("entropy.keep_fraction = 0.6\nsampling.budget = 250\n", "c");
  run_pipeline(c);
  EXPECT_EQ(selection_of(b), selection_of(c));
}

TEST(Pipeline, RunMetaReplaysToIdenticalSelection) {
  Workspace s;
  const auto a = s.config("entropy.keep_fraction = 0.4\nsampling.pruning_ratio = 0.9\nrun.seed = 5\n");
  run_pipeline(a);
  ConfigEntries over;
  over.set("paths.out_dir", (s.dir / "replayed").string());
  const auto b = validate_config(a.paths.out_dir / outputs::kRunMeta, over);
  run_pipeline(b);
  EXPECT_EQ(selection_of(a), selection_of(b));
}

TEST(Pipeline, WorkerCountDoesNotChangeOutput) {
  Workspace s;
  const auto a = s.config("entropy.keep_fraction = 0.5\nsampling.budget = 200\nrun.workers = 1\n", "w1");
  const auto b = s.config("entropy.keep_fraction = 0.5\nsampling.budget = 200\nrun.workers = 4\n", "w4");
  run_pipeline(a);
  run_pipeline(b);
  EXPECT_EQ(selection_of(a), selection_of(b));
  EXPECT_EQ(oracle::read_file(a.paths.out_dir / outputs::kCentroids),
            oracle::read_file(b.paths.out_dir / outputs::kCentroids));
}

TEST(Pipeline, RandomStrategyNeedsNoEmbeddings) {
  Workspace s;
  const auto path = s.corpus.dir / "random.conf";
  write_text_atomic(path, "paths.manifest = manifest.tsv\npaths.scores = scores.tsv\npaths.out_dir = rnd\n"
                          "run.strategy = random\nsampling.budget = 500\n");
  const auto cfg = validate_config(path);
  const auto run = run_pipeline(cfg);
  EXPECT_EQ(run.selection.entries.size(), 500u);
  for (const auto& e : run.selection.entries) EXPECT_EQ(e.stage, Stage::baseline);
  const auto stats = read_key_values(cfg.paths.out_dir / outputs::kSelectionStats);
  EXPECT_EQ(stats[0].second, "random");
}

TEST(Pipeline, BaselineStrategiesRun) {
  Workspace s;
  for (auto strategy : {"moderate_ds", "cluster_nearest"}) {
    const auto cfg = s.config(std::string("entropy.keep_fraction = 0.5\nsampling.budget = 150\nrun.strategy = ") +
                                  strategy + "\n",
                              strategy);
    EXPECT_EQ(run_pipeline(cfg).selection.entries.size(), 150u) << strategy;
  }
}

TEST(Pipeline, InfeasibleBudgetIsReportedBeforeClustering) {
  Workspace s;
  for (const std::string extra : {"entropy.keep_fraction = 0.1\nsampling.pruning_ratio = 0.85\n",
                                  "entropy.keep_fraction = 0.1\nsampling.budget = 201\n"}) {
    const auto cfg = s.config(extra);
    try {
      run_pipeline(cfg);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::infeasible) << e.what();
    }
    EXPECT_FALSE(fs::exists(cfg.paths.out_dir / outputs::kCentroids));
  }
}

TEST(Pipeline, SurvivorsMissingFromEmbeddingsAreAJoinError) {
  Workspace s(300);
  auto m = load_manifest(s.corpus.manifest);
  SampleRecord extra;
  extra.id = "ghost";
  extra.uri = "images/ghost.png";
  m.add(extra);
  write_manifest(m, s.corpus.manifest);
  write_text_atomic(s.corpus.scores, read_text(s.corpus.scores) + "ghost\t9.000000\n");
  const auto cfg = s.config("entropy.keep_fraction = 0.5\nsampling.budget = 20\n");
  try {
    run_pipeline(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::join);
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
}

TEST(Pipeline, DecodesImagesWhenNoScoresAreGiven) {
  oracle::TempDir dir("pipeline-img");
  SyntheticSpec spec;
  spec.n = 40;
  spec.dim = 8;
  spec.k_true = 2;
  const auto c = fixture::write_corpus(dir / "data", spec, 20);
  fs::create_directories(c.dir / "images");
  const auto m = load_manifest(c.manifest);
  // Image i has i + 1 distinct gray levels, so entropy rises with i.
  for (std::size_t i = 0; i < m.size(); ++i) {
    auto img = make_raster(8, 8, 1);
    for (std::size_t p = 0; p < 64; ++p) img.samples[p] = static_cast<std::uint16_t>((p % (i + 1)) * 4);
    encode_raster(img, c.dir / m.records()[i].uri);
  }
  write_text_atomic(c.dir / "c.conf", "paths.manifest = manifest.tsv\npaths.embeddings = embeddings.bin\n"
                                      "paths.reference = reference.bin\npaths.out_dir = run\ncluster.k = 2\n"
                                      "entropy.keep_fraction = 0.5\nsampling.budget = 10\n");
  const auto cfg = validate_config(c.dir / "c.conf");
  const auto run = run_pipeline(cfg);
  EXPECT_EQ(run.n_after_stage1, 20u);
  EXPECT_EQ(run.selection.entries.size(), 10u);
  const auto kept = load_manifest(cfg.paths.out_dir / outputs::kKeptManifest);
  ASSERT_EQ(kept.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(kept.records()[i].id, m.records()[20 + i].id);
}
