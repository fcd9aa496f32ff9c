#pragma once

// On-disk corpora for pipeline-level tests. Unlike the oracles these use the
// library's writers; they only produce inputs.

#include <cstdint>
#include <filesystem>
#include <string>

#include "rsprune/synthetic.hpp"

namespace fixture {

struct Corpus {
  std::filesystem::path dir;
  std::filesystem::path manifest;
  std::filesystem::path embeddings;
  std::filesystem::path reference;
  std::filesystem::path scores;
  rsprune::SyntheticCorpus data;
};

// Manifest, unit embeddings, a balanced reference set and an entropy score
// file (uniform on [0, 8)) under `dir`.
Corpus write_corpus(const std::filesystem::path& dir, const rsprune::SyntheticSpec& spec,
                    std::size_t reference_n);

// Config text pointing at the corpus files (relative paths).
std::string config_text(const Corpus& c, const std::string& extra);

}  // namespace fixture
