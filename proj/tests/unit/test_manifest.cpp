#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rsprune/errors.hpp"
#include "rsprune/manifest.hpp"
#include "rsprune/text_io.hpp"

using namespace rsprune;

namespace {

SampleRecord rec(std::string id) {
  SampleRecord r;
  r.id = std::move(id);
  r.uri = "img/" + r.id + ".png";
  r.width = 4;
  r.height = 3;
  r.bands = 1;
  return r;
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Manifest, RoundTripPreservesOrderTagsAndLabel) {
  oracle::TempDir dir("manifest");
  DatasetManifest m("aerial-v1");
  auto a = rec("b");
  a.tags = {{"sensor", "s2"}, {"split", "train"}};
  m.add(a);
  m.add(rec("a"));
  write_manifest(m, dir / "m.tsv");
  const auto back = load_manifest(dir / "m.tsv");
  EXPECT_EQ(back, m);
  EXPECT_EQ(back.records()[0].id, "b");
  EXPECT_EQ(back.source_label(), "aerial-v1");
}

TEST(Manifest, DuplicateIdNamesIdAndLine) {
  oracle::TempDir dir("manifest");
  write_text_atomic(dir / "m.tsv", "# comment\nx\tu\t1\t1\t1\ny\tu\t1\t1\t1\nx\tu\t1\t1\t1\n");
  const auto msg = error_of([&] { load_manifest(dir / "m.tsv"); });
  EXPECT_NE(msg.find("duplicate id 'x' at line 4"), std::string::npos) << msg;
}

TEST(Manifest, MalformedLinesAreParseErrors) {
  oracle::TempDir dir("manifest");
  write_text_atomic(dir / "m.tsv", "x\tu\t1\t1\n");
  try {
    load_manifest(dir / "m.tsv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parse);
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
  write_text_atomic(dir / "m.tsv", "x\tu\t1\tten\t1\n");
  EXPECT_THROW(load_manifest(dir / "m.tsv"), Error);
  write_text_atomic(dir / "m.tsv", "x\tu\t1\t1\t1\tdangling\n");
  EXPECT_THROW(load_manifest(dir / "m.tsv"), Error);
}

TEST(Manifest, RejectsBadIds) {
  DatasetManifest m;
  EXPECT_THROW(m.add(rec("")), Error);
  EXPECT_THROW(m.add(rec("#x")), Error);
  EXPECT_THROW(m.add(rec("a\tb")), Error);
  m.add(rec("ok"));
  EXPECT_THROW(m.add(rec("ok")), Error);
  EXPECT_TRUE(m.contains("ok"));
  EXPECT_EQ(m.find("missing"), nullptr);
}

TEST(Manifest, FilterKeepsOrder) {
  DatasetManifest m;
  for (auto id : {"c", "a", "d", "b"}) m.add(rec(id));
  auto f = m.filter([](const SampleRecord& r) { return r.id != "a"; });
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(f.records()[0].id, "c");
  EXPECT_EQ(f.records()[2].id, "b");
}

TEST(Selection, RoundTripWithAbsentFields) {
  oracle::TempDir dir("selection");
  std::vector<SelectionEntry> entries(2);
  entries[0].id = "a";
  entries[0].cluster = 3;
  entries[0].rank_in_cluster = 0;
  entries[0].similarity = 0.5;
  entries[0].entropy_bits = 7.25;
  entries[1].id = "b";
  entries[1].stage = Stage::baseline;
  write_selection(entries, dir / "s.tsv");
  EXPECT_EQ(read_text(dir / "s.tsv"), "a\tcluster_sample\t3\t0\t0.500000\t7.250000\nb\tbaseline\t-\t-\t-\t-\n");
  EXPECT_EQ(read_selection(dir / "s.tsv"), entries);
}

TEST(Selection, ClusterSampleNeedsClusterRankAndSimilarity) {
  oracle::TempDir dir("selection");
  SelectionEntry e;
  e.id = "a";
  e.cluster = 1;
  EXPECT_THROW(validate_selection_entry(e), Error);
  EXPECT_THROW(write_selection(std::vector<SelectionEntry>{e}, dir / "s.tsv"), Error);
  EXPECT_FALSE(std::filesystem::exists(dir / "s.tsv"));
}

TEST(Selection, IdsMustExistInManifest) {
  DatasetManifest m;
  m.add(rec("a"));
  SelectionEntry e;
  e.id = "zz";
  e.stage = Stage::baseline;
  EXPECT_THROW(validate_selection(std::vector<SelectionEntry>{e}, m), Error);
  e.id = "a";
  EXPECT_NO_THROW(validate_selection(std::vector<SelectionEntry>{e}, m));
}
