#include "rsprune/sample.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "rsprune/errors.hpp"

namespace rsprune {

SelectionResult stratified_select(const CandidatePools& pools, const SamplingConfig& config) {
  if (config.budget < 1) fail(ErrorKind::config, "sampling budget must be >= 1");
  const std::size_t k = pools.k();
  const std::uint64_t total = pools.total();
  const std::uint64_t target = std::min<std::uint64_t>(config.budget, total);
  const std::uint64_t quota = k == 0 ? 0 : config.budget / k;

  // taken[c] = length of the selected prefix of pool c.
  std::vector<std::size_t> taken(k, 0);
  std::uint64_t selected = 0;
  for (std::size_t c = 0; c < k; ++c) {
    taken[c] = static_cast<std::size_t>(std::min<std::uint64_t>(quota, pools.pools[c].size()));
    selected += taken[c];
  }

  // Every pool is sorted by the global priority order, so the untaken
  // remainder is a k-way merge of pool suffixes.
  std::uint64_t reallocated = 0;
  if (selected < target) {
    auto worse = [&](std::size_t a, std::size_t b) {
      const auto& ma = pools.pools[a][taken[a]];
      const auto& mb = pools.pools[b][taken[b]];
      return higher_priority(mb.sim, pools.id(mb), ma.sim, pools.id(ma));
    };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(worse)> heads(worse);
    for (std::size_t c = 0; c < k; ++c) {
      if (taken[c] < pools.pools[c].size()) heads.push(c);
    }
    while (selected < target) {
      const std::size_t c = heads.top();
      heads.pop();
      ++taken[c];
      ++selected;
      ++reallocated;
      if (taken[c] < pools.pools[c].size()) heads.push(c);
    }
  }

  SelectionResult result;
  result.reallocated_count = reallocated;
  result.per_cluster_counts.assign(taken.begin(), taken.end());
  result.entries.reserve(selected);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t r = 0; r < taken[c]; ++r) {
      const auto& m = pools.pools[c][r];
      SelectionEntry e;
      e.id = pools.id(m);
      e.stage = Stage::cluster_sample;
      e.cluster = static_cast<std::uint32_t>(c);
      e.rank_in_cluster = r;
      e.similarity = m.sim;
      result.entries.push_back(std::move(e));
    }
  }
  return result;
}

std::uint64_t compute_budget(std::uint64_t n_after_stage1, double overall_pruning_ratio,
                             std::uint64_t n_original) {
  if (!(overall_pruning_ratio > 0.0 && overall_pruning_ratio < 1.0)) {
    fail(ErrorKind::config, "overall pruning ratio must be in (0, 1)");
  }
  if (n_after_stage1 > n_original) {
    fail(ErrorKind::config, "stage-I output (" + std::to_string(n_after_stage1) +
                                ") larger than the original corpus (" + std::to_string(n_original) + ")");
  }
  const long double kept = (1.0L - static_cast<long double>(overall_pruning_ratio)) * n_original;
  const auto budget = static_cast<std::uint64_t>(std::llround(kept));
  if (budget == 0) fail(ErrorKind::config, "pruning ratio leaves an empty subset");
  if (budget > n_after_stage1) {
    fail(ErrorKind::infeasible,
         "target subset of " + std::to_string(budget) + " samples exceeds the " + std::to_string(n_after_stage1) +
             " samples surviving stage I; raise the stage-I keep fraction or lower the pruning ratio");
  }
  return budget;
}

KeyValues selection_stats(const SelectionResult& result) {
  KeyValues kv;
  kv.emplace_back("selected", std::to_string(result.entries.size()));
  kv.emplace_back("reallocated", std::to_string(result.reallocated_count));
  kv.emplace_back("clusters", std::to_string(result.per_cluster_counts.size()));
  for (std::size_t c = 0; c < result.per_cluster_counts.size(); ++c) {
    kv.emplace_back("cluster." + std::to_string(c), std::to_string(result.per_cluster_counts[c]));
  }
  return kv;
}

void write_selection_stats(const SelectionResult& result, const std::filesystem::path& path,
                           const KeyValues& extra) {
  KeyValues kv = extra;
  auto stats = selection_stats(result);
  kv.insert(kv.end(), stats.begin(), stats.end());
  write_key_values(path, kv);
}

}  // namespace rsprune
