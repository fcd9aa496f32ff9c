#include "rsprune/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rsprune/cluster.hpp"
#include "rsprune/errors.hpp"
#include "rsprune/rng.hpp"

namespace rsprune {

namespace {
__extension__ using u128 = unsigned __int128;
}  // namespace

std::string_view to_string(BaselineStrategy s) noexcept {
  switch (s) {
    case BaselineStrategy::random: return "random";
    case BaselineStrategy::moderate_ds: return "moderate_ds";
    case BaselineStrategy::cluster_nearest: return "cluster_nearest";
  }
  return "?";
}

BaselineStrategy parse_baseline(std::string_view text) {
  if (text == "random") return BaselineStrategy::random;
  if (text == "moderate_ds") return BaselineStrategy::moderate_ds;
  if (text == "cluster_nearest") return BaselineStrategy::cluster_nearest;
  fail(ErrorKind::config, "unknown baseline strategy '" + std::string(text) + "'");
}

std::vector<std::uint64_t> proportional_allocation(std::span<const std::uint64_t> sizes, std::uint64_t budget) {
  const std::uint64_t total = std::accumulate(sizes.begin(), sizes.end(), std::uint64_t{0});
  const std::uint64_t target = std::min(budget, total);
  std::vector<std::uint64_t> alloc(sizes.size(), 0);
  if (target == 0) return alloc;
  if (target == total) return {sizes.begin(), sizes.end()};

  // Exact integer quotas: target * size / total, remainder kept for ranking.
  std::vector<std::uint64_t> remainder(sizes.size(), 0);
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const u128 num = static_cast<u128>(target) * sizes[i];
    alloc[i] = static_cast<std::uint64_t>(num / total);
    remainder[i] = static_cast<std::uint64_t>(num % total);
    assigned += alloc[i];
  }
  std::vector<std::size_t> order(sizes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < target && i < order.size(); ++i) {
    if (alloc[order[i]] < sizes[order[i]]) {
      ++alloc[order[i]];
      ++assigned;
    }
  }
  return alloc;
}

SelectionResult random_select(const DatasetManifest& manifest, std::uint64_t budget, std::uint64_t seed) {
  if (budget < 1) fail(ErrorKind::config, "budget must be >= 1");
  const std::size_t n = manifest.size();
  const std::size_t take = static_cast<std::size_t>(std::min<std::uint64_t>(budget, n));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(take);
  std::sort(idx.begin(), idx.end());

  SelectionResult out;
  out.entries.reserve(take);
  for (auto i : idx) {
    SelectionEntry e;
    e.id = manifest.records()[i].id;
    e.stage = Stage::baseline;
    out.entries.push_back(std::move(e));
  }
  return out;
}

namespace {

// members[c] = row indices of cluster c, in the desired priority order.
SelectionResult take_prefixes(const std::vector<std::vector<std::size_t>>& members,
                              const std::vector<std::string>& ids, std::span<const float> sims,
                              std::uint64_t budget) {
  std::vector<std::uint64_t> sizes;
  sizes.reserve(members.size());
  for (const auto& m : members) sizes.push_back(m.size());
  const auto alloc = proportional_allocation(sizes, budget);

  SelectionResult out;
  out.per_cluster_counts = alloc;
  for (std::size_t c = 0; c < members.size(); ++c) {
    for (std::size_t r = 0; r < alloc[c]; ++r) {
      const std::size_t row = members[c][r];
      SelectionEntry e;
      e.id = ids[row];
      e.stage = Stage::baseline;
      e.cluster = static_cast<std::uint32_t>(c);
      e.rank_in_cluster = r;
      e.similarity = sims[row];
      out.entries.push_back(std::move(e));
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> group_by_label(std::span<const std::uint32_t> labels, std::size_t k) {
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  return members;
}

}  // namespace

SelectionResult moderate_ds_select(const EmbeddingMatrix& m, const AssignmentTable& assignments,
                                   std::uint64_t budget) {
  if (budget < 1) fail(ErrorKind::config, "budget must be >= 1");
  assignments.validate();
  if (assignments.ids != m.ids()) {
    fail(ErrorKind::precondition, "assignment table does not cover the embedding rows");
  }
  const auto& ids = assignments.ids;
  const auto& sims = assignments.sims;
  auto members = group_by_label(assignments.labels, assignments.k);

  for (auto& cluster : members) {
    if (cluster.empty()) continue;
    std::vector<float> s;
    s.reserve(cluster.size());
    for (auto r : cluster) s.push_back(sims[r]);
    std::sort(s.begin(), s.end());
    const std::size_t h = s.size() / 2;
    const double median = s.size() % 2 ? s[h] : 0.5 * (static_cast<double>(s[h - 1]) + s[h]);
    std::sort(cluster.begin(), cluster.end(), [&](std::size_t a, std::size_t b) {
      const double da = std::fabs(sims[a] - median);
      const double db = std::fabs(sims[b] - median);
      if (da != db) return da < db;
      return ids[a] < ids[b];
    });
  }
  return take_prefixes(members, ids, sims, budget);
}

SelectionResult cluster_nearest_select(const EmbeddingMatrix& m, const ClusterConfig& cfg,
                                       std::uint64_t budget, unsigned workers) {
  if (budget < 1) fail(ErrorKind::config, "budget must be >= 1");
  std::vector<std::uint32_t> labels;
  std::vector<float> sims;
  const auto centroids = spherical_kmeans(m.view(), cfg, workers, &labels, &sims);

  const auto& ids = m.ids();
  auto members = group_by_label(labels, centroids.k());
  for (auto& cluster : members) {
    std::sort(cluster.begin(), cluster.end(), [&](std::size_t a, std::size_t b) {
      return higher_priority(sims[a], ids[a], sims[b], ids[b]);
    });
  }
  return take_prefixes(members, ids, sims, budget);
}

}  // namespace rsprune
