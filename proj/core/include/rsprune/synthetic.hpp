#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rsprune/embedding.hpp"

namespace rsprune {

/// Mixture of normalized-Gaussian blobs on the unit sphere, Zipf-sized, plus
/// uniformly random "noise" directions.
struct SyntheticSpec {
  std::size_t n = 1000;
  std::uint32_t dim = 64;
  std::uint32_t k_true = 10;
  double imbalance = 0.0;       // Zipf exponent over component sizes; 0 = balanced
  double noise_fraction = 0.0;  // [0, 1)
  double spread = 0.15;         // per-row perturbation norm before re-normalizing
  std::uint64_t seed = 0;
  std::string id_prefix = "s";

  void validate() const;
};

struct SyntheticCorpus {
  EmbeddingMatrix matrix;
  std::vector<std::int32_t> labels;  // component per row, -1 for noise rows
  std::vector<float> means;          // k_true x dim unit vectors
  std::vector<std::uint64_t> component_sizes;
};

/// Sizes proportional to 1 / (i + 1)^exponent, every component at least one
/// row, summing to `n` exactly.
std::vector<std::uint64_t> zipf_sizes(std::uint64_t n, std::uint32_t k, double exponent);

/// Deterministic per spec. Rows are shuffled so components are interleaved.
SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

/// Rows drawn around existing component means (e.g. a balanced reference set
/// sharing the components of a corpus).
SyntheticCorpus sample_components(std::span<const float> means, std::uint32_t dim,
                                  std::span<const std::uint64_t> sizes, double spread, std::uint64_t seed,
                                  const std::string& id_prefix);

/// Uniformly random unit rows.
EmbeddingMatrix random_unit_matrix(std::size_t n, std::uint32_t dim, std::uint64_t seed,
                                   const std::string& id_prefix = "u");

}  // namespace rsprune
