#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rsprune/assign.hpp"
#include "rsprune/manifest.hpp"
#include "rsprune/text_io.hpp"

namespace rsprune {

struct SamplingConfig {
  std::uint64_t budget = 1;
};

struct SelectionResult {
  std::vector<SelectionEntry> entries;
  std::vector<std::uint64_t> per_cluster_counts;
  std::uint64_t reallocated_count = 0;
};

/// Cluster-balanced, centroid-prioritized selection.
///
/// With q = floor(B / K):
///   1. every pool contributes its top-q members (all of them if smaller);
///   2. if fewer than min(B, N) were taken, the rest is filled from the union
///      of untaken members in descending similarity (ascending id on ties).
/// When B < K the quota phase is skipped and step 2 picks all B.
///
/// Entries are ordered by cluster, then rank within the cluster's pool.
SelectionResult stratified_select(const CandidatePools& pools, const SamplingConfig& config);

/// B = round((1 - overall_pruning_ratio) * n_original).
/// Throws ErrorKind::config for a ratio outside (0, 1) or n_after_stage1 >
/// n_original, and ErrorKind::infeasible when B exceeds the stage-I output.
std::uint64_t compute_budget(std::uint64_t n_after_stage1, double overall_pruning_ratio,
                             std::uint64_t n_original);

/// Stats sidecar (`key<TAB>value`): sizes, reallocation and per-cluster counts.
KeyValues selection_stats(const SelectionResult& result);
void write_selection_stats(const SelectionResult& result, const std::filesystem::path& path,
                           const KeyValues& extra = {});

}  // namespace rsprune
