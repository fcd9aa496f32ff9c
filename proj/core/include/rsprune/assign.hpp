#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rsprune/cluster.hpp"
#include "rsprune/embedding.hpp"

namespace rsprune {

/// Hard nearest-centroid label and attained similarity for every sample.
struct AssignmentTable {
  std::vector<std::string> ids;
  std::vector<std::uint32_t> labels;
  std::vector<float> sims;
  std::uint32_t k = 0;

  std::size_t size() const noexcept { return ids.size(); }
  // Throws ErrorKind::validation.
  void validate() const;
};

/// label = argmax_k <z_x, mu_k> (smallest k on ties), sim = the maximum.
/// Both inputs must be unit-norm (tolerance 1e-4). Independent of `workers`.
AssignmentTable assign_nearest(const EmbeddingMatrix& m, const CentroidSet& c, unsigned workers = 1);

/// Same result computed over an embedding file `chunk_rows` rows at a time.
AssignmentTable assign_nearest(EmbeddingReader& reader, const CentroidSet& c, std::size_t chunk_rows,
                               unsigned workers = 1);

struct PoolMember {
  std::size_t row;  // index into CandidatePools::ids
  float sim;
};

/// Per-cluster candidates, each pool sorted by sim descending then id
/// ascending. Pools may be empty.
struct CandidatePools {
  std::vector<std::string> ids;
  std::vector<std::vector<PoolMember>> pools;

  std::size_t k() const noexcept { return pools.size(); }
  std::size_t total() const noexcept;
  const std::string& id(const PoolMember& m) const { return ids[m.row]; }
};

/// Strict ordering used by every priority list: sim desc, then id asc.
inline bool higher_priority(float sim_a, const std::string& id_a, float sim_b, const std::string& id_b) {
  if (sim_a != sim_b) return sim_a > sim_b;
  return id_a < id_b;
}

CandidatePools pool_by_cluster(const AssignmentTable& table, unsigned workers = 1);

/// `id<TAB>label<TAB>sim`, sim at 6 decimals.
void write_assignments(const AssignmentTable& table, const std::filesystem::path& path);
/// Reads the text form; sims carry only the 6 stored decimals.
AssignmentTable read_assignments(const std::filesystem::path& path, std::uint32_t k);

/// Exact binary snapshot (full float sims) used to resume pipeline runs.
void write_assignment_cache(const AssignmentTable& table, const std::filesystem::path& path);
AssignmentTable read_assignment_cache(const std::filesystem::path& path);

}  // namespace rsprune
