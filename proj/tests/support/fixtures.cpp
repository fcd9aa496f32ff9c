#include "fixtures.hpp"

#include <algorithm>

#include "rsprune/embedding.hpp"
#include "rsprune/entropy.hpp"
#include "rsprune/manifest.hpp"
#include "rsprune/rng.hpp"

namespace fixture {

using namespace rsprune;

Corpus write_corpus(const std::filesystem::path& dir, const SyntheticSpec& spec, std::size_t reference_n) {
  std::filesystem::create_directories(dir);
  Corpus c;
  c.dir = dir;
  c.manifest = dir / "manifest.tsv";
  c.embeddings = dir / "embeddings.bin";
  c.reference = dir / "reference.bin";
  c.scores = dir / "scores.tsv";
  c.data = generate_synthetic(spec);
  write_embeddings(c.data.matrix, c.embeddings);

  const std::vector<std::uint64_t> balanced(spec.k_true, std::max<std::size_t>(1, reference_n / spec.k_true));
  const auto ref = sample_components(c.data.means, spec.dim, balanced, spec.spread, spec.seed + 1, "r");
  write_embeddings(ref.matrix, c.reference);

  DatasetManifest m("fixture");
  std::vector<EntropyScore> scores;
  Rng rng(spec.seed + 2);
  for (const auto& id : c.data.matrix.ids()) {
    SampleRecord r;
    r.id = id;
    r.uri = "images/" + id + ".png";
    r.width = r.height = 8;
    r.bands = 1;
    m.add(std::move(r));
    scores.push_back({id, 8.0 * rng.uniform()});
  }
  write_manifest(m, c.manifest);
  write_scores(scores, c.scores);
  return c;
}

std::string config_text(const Corpus& c, const std::string& extra) {
  return "paths.manifest = " + c.manifest.filename().string() + "\n" +
         "paths.embeddings = " + c.embeddings.filename().string() + "\n" +
         "paths.reference = " + c.reference.filename().string() + "\n" +
         "paths.scores = " + c.scores.filename().string() + "\n" + extra;
}

}  // namespace fixture
