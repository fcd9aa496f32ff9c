#include "rsprune/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>

#include "rsprune/errors.hpp"
#include "rsprune/parallel.hpp"
#include "rsprune/rng.hpp"
#include "rsprune/similarity.hpp"
#include "rsprune/text_io.hpp"

namespace rsprune {

std::string_view to_string(InitMethod init) noexcept {
  return init == InitMethod::kmeans_pp ? "kmeans_pp" : "random_rows";
}

InitMethod parse_init_method(std::string_view text) {
  if (text == "kmeans_pp") return InitMethod::kmeans_pp;
  if (text == "random_rows") return InitMethod::random_rows;
  fail(ErrorKind::config, "unknown cluster init '" + std::string(text) + "'");
}

void ClusterConfig::validate(std::size_t n) const {
  if (k < 1) fail(ErrorKind::config, "cluster.k must be >= 1");
  if (k > n) {
    fail(ErrorKind::config, "cluster.k = " + std::to_string(k) + " exceeds the " + std::to_string(n) +
                                " rows available");
  }
  if (max_iters < 1) fail(ErrorKind::config, "cluster.max_iters must be >= 1");
  if (!(tol >= 0.0) || !std::isfinite(tol)) fail(ErrorKind::config, "cluster.tol must be >= 0");
}

CentroidSet::CentroidSet(std::uint32_t dim, std::vector<float> data, ClusterMeta m)
    : meta(std::move(m)), dim_(dim), data_(std::move(data)) {
  if (dim_ == 0 || data_.size() % dim_ != 0) fail(ErrorKind::validation, "centroid data is not K x dim");
}

void CentroidSet::validate() const {
  if (k() < 1) fail(ErrorKind::validation, "centroid set is empty");
  if (auto bad = first_non_unit_row(view(), 1e-5)) {
    fail(ErrorKind::validation, "centroid " + std::to_string(*bad) + " is not unit-norm");
  }
  std::set<std::vector<float>> seen;
  for (std::size_t i = 0; i < k(); ++i) {
    auto r = row(i);
    if (!seen.emplace(r.begin(), r.end()).second) {
      fail(ErrorKind::validation, "centroid " + std::to_string(i) + " duplicates an earlier centroid");
    }
  }
}

namespace {

bool same_bits(std::span<const float> a, std::span<const float> b) {
  return std::memcmp(a.data(), b.data(), a.size_bytes()) == 0;
}

// Eight independent float lanes, combined in a fixed order.
float dot_lanes(const float* a, const float* b, std::uint32_t n) {
  float lane[8] = {};
  std::uint32_t j = 0;
  for (; j + 8 <= n; j += 8) {
    for (int l = 0; l < 8; ++l) lane[l] += a[j + l] * b[j + l];
  }
  for (; j < n; ++j) lane[0] += a[j] * b[j];
  return ((lane[0] + lane[1]) + (lane[2] + lane[3])) + ((lane[4] + lane[5]) + (lane[6] + lane[7]));
}

CentroidSet from_rows(MatrixView rows, std::span<const std::size_t> picks, std::uint64_t seed) {
  std::vector<float> data;
  data.reserve(picks.size() * rows.dim);
  for (auto p : picks) {
    auto r = rows.row(p);
    data.insert(data.end(), r.begin(), r.end());
  }
  ClusterMeta meta;
  meta.seed = seed;
  return CentroidSet(rows.dim, std::move(data), std::move(meta));
}

void check_init_args(MatrixView rows, std::uint32_t k) {
  if (k < 1) fail(ErrorKind::config, "k must be >= 1");
  if (k > rows.rows) {
    fail(ErrorKind::config, "k = " + std::to_string(k) + " exceeds " + std::to_string(rows.rows) + " rows");
  }
}

}  // namespace

CentroidSet kmeanspp_init(MatrixView rows, std::uint32_t k, std::uint64_t seed, unsigned workers) {
  check_init_args(rows, k);
  Rng rng(seed);
  const std::size_t n = rows.rows;
  std::vector<std::size_t> picks;
  picks.reserve(k);
  picks.push_back(static_cast<std::size_t>(rng.below(n)));

  std::vector<double> weight(n, 0.0);
  std::vector<float> nearest(n, 2.0f);  // min cosine distance so far

  while (picks.size() < k) {
    const auto centre = rows.row(picks.back());
    parallel_for_ranges(n, workers, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const auto x = rows.row(i);
        float d = same_bits(x, centre) ? 0.0f
                                       : std::max(0.0f, 1.0f - dot_lanes(x.data(), centre.data(), rows.dim));
        nearest[i] = std::min(nearest[i], d);
        weight[i] = static_cast<double>(nearest[i]) * nearest[i];
      }
    });
    double total = 0.0;
    for (double w : weight) total += w;
    if (!(total > 0.0)) {
      fail(ErrorKind::degenerate, "fewer than k = " + std::to_string(k) + " distinct rows");
    }
    const double target = rng.uniform() * total;
    double cumulative = 0.0;
    std::size_t chosen = n;
    std::size_t last_positive = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (weight[i] <= 0.0) continue;
      last_positive = i;
      cumulative += weight[i];
      if (cumulative > target) {
        chosen = i;
        break;
      }
    }
    picks.push_back(chosen == n ? last_positive : chosen);
  }
  return from_rows(rows, picks, seed);
}

CentroidSet random_rows_init(MatrixView rows, std::uint32_t k, std::uint64_t seed) {
  check_init_args(rows, k);
  Rng rng(seed);
  std::vector<std::size_t> order(rows.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> picks;
  for (std::size_t i = 0; i < order.size() && picks.size() < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(order.size() - i));
    std::swap(order[i], order[j]);
    const auto cand = rows.row(order[i]);
    bool dup = std::any_of(picks.begin(), picks.end(), [&](auto p) { return same_bits(rows.row(p), cand); });
    if (!dup) picks.push_back(order[i]);
  }
  if (picks.size() < k) fail(ErrorKind::degenerate, "fewer than k = " + std::to_string(k) + " distinct rows");
  return from_rows(rows, picks, seed);
}

void assign_rows(MatrixView rows, const CentroidSet& centroids, std::span<std::uint32_t> labels,
                 std::span<float> sims, unsigned workers) {
  if (rows.dim != centroids.dim()) {
    fail(ErrorKind::precondition, "dimension mismatch: rows " + std::to_string(rows.dim) + ", centroids " +
                                      std::to_string(centroids.dim()));
  }
  const CentroidPanel panel(centroids.view());
  // Small fixed ranges keep every worker busy; results land in disjoint slots.
  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (rows.rows + kChunk - 1) / kChunk;
  parallel_for_ranges(chunks, workers, [&](std::size_t cb, std::size_t ce) {
    for (std::size_t c = cb; c < ce; ++c) {
      const std::size_t begin = c * kChunk;
      const std::size_t count = std::min(kChunk, rows.rows - begin);
      panel.argmax(rows.slice(begin, count), labels.subspan(begin, count), sims.subspan(begin, count));
    }
  });
}

double cluster_objective(MatrixView rows, const CentroidSet& centroids, unsigned workers) {
  std::vector<std::uint32_t> labels(rows.rows);
  std::vector<float> sims(rows.rows);
  assign_rows(rows, centroids, labels, sims, workers);
  double total = 0.0;
  for (float s : sims) total += s;
  return total;
}

namespace {

struct Assignment {
  std::vector<std::uint32_t> labels;
  std::vector<float> sims;
  double objective = 0.0;
};

Assignment assign_all(MatrixView rows, const CentroidSet& c, unsigned workers) {
  Assignment a;
  a.labels.resize(rows.rows);
  a.sims.resize(rows.rows);
  assign_rows(rows, c, a.labels, a.sims, workers);
  for (float s : a.sims) a.objective += s;
  return a;
}

std::vector<float> update_centroids(MatrixView rows, const Assignment& a, std::size_t k, unsigned workers) {
  const std::uint32_t dim = rows.dim;
  // Members of each cluster in row order (counting sort).
  std::vector<std::size_t> start(k + 1, 0);
  for (auto l : a.labels) ++start[l + 1];
  for (std::size_t i = 0; i < k; ++i) start[i + 1] += start[i];
  std::vector<std::size_t> members(rows.rows);
  {
    std::vector<std::size_t> fill(start.begin(), start.end() - 1);
    for (std::size_t i = 0; i < rows.rows; ++i) members[fill[a.labels[i]]++] = i;
  }

  std::vector<float> out(k * dim, 0.0f);
  std::vector<char> empty(k, 0);
  parallel_for_ranges(k, workers, [&](std::size_t kb, std::size_t ke) {
    std::vector<double> sum(dim);
    for (std::size_t c = kb; c < ke; ++c) {
      std::fill(sum.begin(), sum.end(), 0.0);
      for (std::size_t m = start[c]; m < start[c + 1]; ++m) {
        const auto x = rows.row(members[m]);
        for (std::uint32_t j = 0; j < dim; ++j) sum[j] += x[j];
      }
      double norm = 0.0;
      for (double v : sum) norm += v * v;
      norm = std::sqrt(norm);
      if (start[c] == start[c + 1] || !(norm >= 1e-12)) {
        empty[c] = 1;
        continue;
      }
      for (std::uint32_t j = 0; j < dim; ++j) out[c * dim + j] = static_cast<float>(sum[j] / norm);
    }
  });

  std::vector<std::size_t> empties;
  for (std::size_t c = 0; c < k; ++c) {
    if (empty[c]) empties.push_back(c);
  }
  if (empties.empty()) return out;

  // Re-seed empties with the worst-fitting rows, worst first.
  std::vector<std::size_t> order(rows.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return a.sims[x] < a.sims[y]; });
  std::vector<std::size_t> used;
  std::size_t next = 0;
  for (auto c : empties) {
    while (next < order.size()) {
      const auto cand = rows.row(order[next]);
      bool dup = std::any_of(used.begin(), used.end(), [&](auto u) { return same_bits(rows.row(u), cand); });
      if (!dup) break;
      ++next;
    }
    if (next == order.size()) fail(ErrorKind::degenerate, "not enough distinct rows to re-seed empty clusters");
    const auto src = rows.row(order[next]);
    std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(c * dim));
    used.push_back(order[next]);
    ++next;
  }
  return out;
}

}  // namespace

CentroidSet spherical_kmeans(MatrixView rows, const ClusterConfig& config, unsigned workers,
                             std::vector<std::uint32_t>* final_labels, std::vector<float>* final_sims) {
  config.validate(rows.rows);
  if (auto bad = first_non_unit_row(rows, 1e-4)) {
    fail(ErrorKind::precondition, "row " + std::to_string(*bad) + " is not unit-norm; normalize first");
  }

  CentroidSet current = config.init == InitMethod::kmeans_pp
                            ? kmeanspp_init(rows, config.k, config.seed, workers)
                            : random_rows_init(rows, config.k, config.seed);
  Assignment assignment = assign_all(rows, current, workers);
  ClusterMeta meta;
  meta.seed = config.seed;
  meta.history.push_back(assignment.objective);

  for (std::uint32_t it = 1; it <= config.max_iters; ++it) {
    CentroidSet next(rows.dim, update_centroids(rows, assignment, config.k, workers));
    Assignment next_assignment = assign_all(rows, next, workers);
    const double previous = assignment.objective;
    if (next_assignment.objective < previous) break;

    current = std::move(next);
    assignment = std::move(next_assignment);
    meta.iterations = it;
    meta.history.push_back(assignment.objective);
    if (assignment.objective - previous <= config.tol * std::fabs(previous)) break;
  }
  meta.objective = assignment.objective;
  current.meta = std::move(meta);
  if (final_labels) *final_labels = std::move(assignment.labels);
  if (final_sims) *final_sims = std::move(assignment.sims);
  return current;
}

void save_centroids(const CentroidSet& centroids, const std::filesystem::path& path) {
  std::vector<std::string> ids;
  ids.reserve(centroids.k());
  for (std::size_t i = 0; i < centroids.k(); ++i) ids.push_back("c" + std::to_string(i));
  write_embeddings(EmbeddingMatrix(std::move(ids), centroids.dim(), centroids.data()), path,
                   NormPolicy::require_unit);
  std::filesystem::path meta_path = path;
  meta_path += ".meta";
  write_key_values(meta_path, {
                                  {"k", std::to_string(centroids.k())},
                                  {"dim", std::to_string(centroids.dim())},
                                  {"seed", std::to_string(centroids.meta.seed)},
                                  {"iterations", std::to_string(centroids.meta.iterations)},
                                  {"objective", format_exact(centroids.meta.objective)},
                              });
}

CentroidSet load_centroids(const std::filesystem::path& path) {
  auto m = read_embeddings(path);
  CentroidSet c(m.dim(), m.data());
  std::filesystem::path meta_path = path;
  meta_path += ".meta";
  if (std::filesystem::exists(meta_path)) {
    for (const auto& [key, value] : read_key_values(meta_path)) {
      if (key == "seed") c.meta.seed = parse_u64(value).value_or(0);
      if (key == "iterations") c.meta.iterations = static_cast<std::uint32_t>(parse_u64(value).value_or(0));
      if (key == "objective") c.meta.objective = parse_double(value).value_or(0.0);
    }
  }
  c.validate();
  return c;
}

}  // namespace rsprune
