// Writes a self-contained synthetic corpus: images, manifest, corpus and
// reference embeddings, and a ready-to-run pipeline config.
#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <string>

#include "rsprune/embedding.hpp"
#include "rsprune/errors.hpp"
#include "rsprune/manifest.hpp"
#include "rsprune/parallel.hpp"
#include "rsprune/raster.hpp"
#include "rsprune/rng.hpp"
#include "rsprune/synthetic.hpp"
#include "rsprune/text_io.hpp"

namespace {

using namespace rsprune;

// Pixels drawn from `distinct` evenly spaced gray levels, so images span a
// wide range of entropies.
Raster textured_image(std::uint32_t size, std::uint32_t bands, std::uint64_t seed) {
  Rng rng(seed);
  const auto distinct = 1 + rng.below(256);
  auto r = make_raster(size, size, bands);
  for (std::size_t p = 0; p < r.pixel_count(); ++p) {
    const auto level = static_cast<std::uint16_t>(rng.below(distinct) * 255 / std::max<std::uint64_t>(1, distinct - 1));
    for (std::uint32_t b = 0; b < bands; ++b) r.samples[p * bands + b] = level;
  }
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rsprune-synth: generate a synthetic corpus for rsprune"};
  std::string out_dir = "synthetic";
  SyntheticSpec spec;
  spec.n = 10000;
  spec.k_true = 50;
  spec.imbalance = 1.0;
  std::size_t reference_n = 5000;
  std::uint32_t image_size = 16;
  std::uint32_t k = 200;
  unsigned workers = 1;
  bool no_images = false;

  app.add_option("--out-dir", out_dir, "Output directory");
  app.add_option("--n", spec.n, "Corpus size");
  app.add_option("--dim", spec.dim, "Embedding dimension");
  app.add_option("--k-true", spec.k_true, "Generating components");
  app.add_option("--imbalance", spec.imbalance, "Zipf exponent of component sizes");
  app.add_option("--noise", spec.noise_fraction, "Fraction of unstructured rows");
  app.add_option("--reference-n", reference_n, "Balanced reference set size");
  app.add_option("--image-size", image_size, "Square image side in pixels");
  app.add_option("--k", k, "cluster.k written to the config");
  app.add_option("--seed", spec.seed, "Generator seed");
  app.add_option("--workers", workers, "Parallel image writers");
  app.add_flag("--no-images", no_images, "Write an entropy scores file instead of images");
  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path root(out_dir);
    fs::create_directories(root / "images");
    spec.validate();
    const auto corpus = generate_synthetic(spec);
    write_embeddings(corpus.matrix, root / "embeddings.bin");

    const std::vector<std::uint64_t> balanced(spec.k_true, std::max<std::size_t>(1, reference_n / spec.k_true));
    const auto reference =
        sample_components(corpus.means, spec.dim, balanced, spec.spread, derive_seed(spec.seed, "reference"), "r");
    write_embeddings(reference.matrix, root / "reference.bin");

    const auto& ids = corpus.matrix.ids();
    DatasetManifest manifest("synthetic");
    std::string scores;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      SampleRecord r;
      r.id = ids[i];
      r.uri = "images/" + ids[i] + ".png";
      r.width = r.height = image_size;
      r.bands = (i % 3 == 0) ? 3 : 1;
      manifest.add(std::move(r));
      if (no_images) {
        Rng rng(derive_seed(spec.seed, "image." + ids[i]));
        scores += ids[i] + "\t" + format_fixed(8.0 * rng.uniform(), 6) + "\n";
      }
    }
    write_manifest(manifest, root / "manifest.tsv");

    if (no_images) {
      write_text_atomic(root / "entropy_scores.tsv", scores);
    } else {
      const auto& recs = manifest.records();
      parallel_for_ranges(recs.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          const auto img = textured_image(image_size, recs[i].bands, derive_seed(spec.seed, "image." + recs[i].id));
          encode_raster(img, root / recs[i].uri);
        }
      });
    }

    std::string conf;
    conf += "paths.manifest = manifest.tsv\n";
    conf += "paths.embeddings = embeddings.bin\n";
    conf += "paths.reference = reference.bin\n";
    if (no_images) conf += "paths.scores = entropy_scores.tsv\n";
    conf += "paths.out_dir = run\n";
    conf += "entropy.keep_fraction = 0.3\n";
    conf += "cluster.k = " + std::to_string(std::min<std::size_t>(k, reference.matrix.rows())) + "\n";
    conf += "sampling.pruning_ratio = 0.85\n";
    write_text_atomic(root / "pipeline.conf", conf);
    std::printf("wrote %zu samples, %zu reference rows -> %s\n", spec.n, reference.matrix.rows(),
                (root / "pipeline.conf").string().c_str());
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.kind());
  }
  return 0;
}
