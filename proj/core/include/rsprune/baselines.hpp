#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "rsprune/assign.hpp"
#include "rsprune/embedding.hpp"
#include "rsprune/manifest.hpp"
#include "rsprune/sample.hpp"

namespace rsprune {

enum class BaselineStrategy { random, moderate_ds, cluster_nearest };

std::string_view to_string(BaselineStrategy s) noexcept;
BaselineStrategy parse_baseline(std::string_view text);

/// Largest-remainder apportionment of min(budget, sum(sizes)) proportional
/// to `sizes`; remainders tie-break toward the lower index. Never assigns
/// more than sizes[i] to slot i.
std::vector<std::uint64_t> proportional_allocation(std::span<const std::uint64_t> sizes, std::uint64_t budget);

/// min(B, N) ids drawn uniformly without replacement; entries in manifest order.
SelectionResult random_select(const DatasetManifest& manifest, std::uint64_t budget, std::uint64_t seed);

/// Median-band selection: within each cluster, members are ranked by
/// |sim - median(sims of the cluster)| (ties: ascending id) and the closest
/// prefix is kept; per-cluster budgets are proportional to cluster size.
/// `assignments` must cover exactly the rows of `m`.
SelectionResult moderate_ds_select(const EmbeddingMatrix& m, const AssignmentTable& assignments,
                                   std::uint64_t budget);

/// Clusters `m` itself with spherical k-means under `config` and keeps the
/// most centroid-similar members of every cluster, per-cluster budgets
/// proportional to cluster size.
SelectionResult cluster_nearest_select(const EmbeddingMatrix& m, const ClusterConfig& config,
                                       std::uint64_t budget, unsigned workers = 1);

}  // namespace rsprune
