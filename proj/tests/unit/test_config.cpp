#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rsprune/config.hpp"
#include "rsprune/errors.hpp"
#include "rsprune/text_io.hpp"

using namespace rsprune;

namespace {

std::string config_error(const std::string& text, const fs::path& base = fs::temp_directory_path()) {
  try {
    resolve_config(ConfigEntries::parse(text, base, "test"), false);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
    return e.what();
  }
  return "";
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST(Config, MinimalConfigAppliesAndReportsDefaults) {
  const auto cfg = resolve_config(
      ConfigEntries::parse("paths.manifest = m.tsv\nsampling.pruning_ratio = 0.85\n", "/data", "t"), false);
  EXPECT_EQ(cfg.cluster.k, 200u);
  EXPECT_EQ(cfg.cluster.tol, 1e-4);
  EXPECT_EQ(cfg.cluster.max_iters, 100u);
  EXPECT_EQ(cfg.entropy.levels, 256u);
  EXPECT_EQ(cfg.entropy.keep_fraction, 1.0);
  EXPECT_EQ(cfg.strategy, "primary");
  EXPECT_EQ(cfg.paths.manifest, fs::path("/data/m.tsv"));
  const auto report = validation_report(cfg);
  for (auto key : {"cluster.k = 200", "cluster.tol = 0.0001", "cluster.max_iters = 100", "entropy.levels = 256"}) {
    EXPECT_TRUE(contains(report, key)) << key << "\n" << report;
  }
}

TEST(Config, UnknownKeyGetsSuggestion) {
  const auto msg = config_error("entropy.kepe_fraction = 0.3\nsampling.budget = 5\n");
  EXPECT_TRUE(contains(msg, "entropy.kepe_fraction")) << msg;
  EXPECT_TRUE(contains(msg, "entropy.keep_fraction")) << msg;
}

TEST(Config, BothSamplingKeysIsAnError) {
  const auto msg = config_error("sampling.budget = 5\nsampling.pruning_ratio = 0.5\n");
  EXPECT_TRUE(contains(msg, "sampling.pruning_ratio")) << msg;
  EXPECT_TRUE(contains(msg, "sampling.budget")) << msg;
  EXPECT_TRUE(contains(config_error("run.seed = 1\n"), "exactly one"));
}

TEST(Config, ModeSpecificKeysMustMatchMode) {
  EXPECT_TRUE(contains(config_error("entropy.tau = 3\nsampling.budget = 5\n"), "entropy.tau"));
  EXPECT_TRUE(contains(config_error("entropy.mode = threshold\nsampling.budget = 5\n"), "entropy.tau is required"));
  EXPECT_TRUE(contains(config_error("entropy.mode = threshold\nentropy.tau = 1\nentropy.keep_fraction = 0.5\n"
                                    "sampling.budget = 5\n"),
                       "entropy.keep_fraction"));
}

TEST(Config, AllProblemsReportedTogether) {
  const auto msg = config_error("cluster.k = zero\nsampling.pruning_ratio = 1.5\nrun.strategy = herding\n");
  EXPECT_TRUE(contains(msg, "cluster.k")) << msg;
  EXPECT_TRUE(contains(msg, "sampling.pruning_ratio")) << msg;
  EXPECT_TRUE(contains(msg, "herding")) << msg;
}

TEST(Config, SyntaxErrors) {
  EXPECT_THROW(ConfigEntries::parse("no equals sign\n", "/", "t"), Error);
  EXPECT_THROW(ConfigEntries::parse("nosection = 1\n", "/", "t"), Error);
  EXPECT_THROW(ConfigEntries::parse("a.b = 1\na.b = 2\n", "/", "t"), Error);
  const auto e = ConfigEntries::parse("# comment\n\n  a.b = x y  \n", "/", "t");
  EXPECT_EQ(e.entries().at("a.b").value, "x y");
}

TEST(Config, MissingInputPathsAreReported) {
  oracle::TempDir dir("config");
  write_text_atomic(dir / "c.conf", "paths.manifest = nope.tsv\nsampling.budget = 3\n");
  try {
    validate_config(dir / "c.conf");
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(contains(e.what(), "nope.tsv"));
  }
  EXPECT_THROW(validate_config(dir / "missing.conf"), Error);
}

TEST(Config, OverridesWinAndRelativePathsFollowTheirSource) {
  oracle::TempDir dir("config");
  SyntheticSpec spec;
  spec.n = 50;
  const auto c = fixture::write_corpus(dir.path(), spec, 20);
  write_text_atomic(dir / "c.conf", fixture::config_text(c, "sampling.budget = 3\nrun.seed = 1\n"));
  ConfigEntries over;
  over.set("run.seed", "9");
  over.set("paths.out_dir", "elsewhere", "/tmp/base");
  const auto cfg = validate_config(dir / "c.conf", over);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.paths.out_dir, fs::path("/tmp/base/elsewhere"));
  EXPECT_EQ(cfg.paths.manifest, (dir.path() / "manifest.tsv").lexically_normal());
  EXPECT_NE(cfg.cluster.seed, 9u);
}

TEST(Config, RenderedConfigReplaysToTheSameSettings) {
  oracle::TempDir dir("config");
  SyntheticSpec spec;
  spec.n = 50;
  const auto c = fixture::write_corpus(dir.path(), spec, 20);
  write_text_atomic(dir / "c.conf",
                    fixture::config_text(c, "entropy.mode = threshold\nentropy.tau = 2.5\nsampling.budget = 7\n"
                                            "cluster.k = 4\nrun.strategy = moderate_ds\n"));
  const auto a = validate_config(dir / "c.conf");
  fs::create_directories(dir / "sub");
  write_text_atomic(dir / "sub" / "replay.conf", render_config(a));
  const auto b = validate_config(dir / "sub" / "replay.conf");
  EXPECT_EQ(render_config(a), render_config(b));
  EXPECT_EQ(b.entropy.tau, 2.5);
  EXPECT_EQ(b.budget, 7u);
  EXPECT_EQ(b.strategy, "moderate_ds");
  EXPECT_TRUE(b.defaults_applied.empty());
}
