#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "rsprune/embedding.hpp"

namespace rsprune {

enum class InitMethod { kmeans_pp, random_rows };

std::string_view to_string(InitMethod init) noexcept;
InitMethod parse_init_method(std::string_view text);

struct ClusterConfig {
  std::uint32_t k = 200;
  std::uint64_t seed = 0;
  std::uint32_t max_iters = 100;
  double tol = 1e-4;  // stop when relative objective gain drops below this
  InitMethod init = InitMethod::kmeans_pp;

  // Throws ErrorKind::config. n is the number of rows to be clustered.
  void validate(std::size_t n) const;
};

struct ClusterMeta {
  std::uint64_t seed = 0;
  std::uint32_t iterations = 0;
  double objective = 0.0;
  // Objective after the initial assignment and after every accepted update.
  std::vector<double> history;
};

/// K unit-norm centroids, row-major.
class CentroidSet {
 public:
  CentroidSet() = default;
  CentroidSet(std::uint32_t dim, std::vector<float> data, ClusterMeta meta = {});

  std::size_t k() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
  std::uint32_t dim() const noexcept { return dim_; }
  const std::vector<float>& data() const noexcept { return data_; }
  std::span<const float> row(std::size_t k) const { return {data_.data() + k * dim_, dim_}; }
  MatrixView view() const { return {data_, k(), dim_}; }

  ClusterMeta meta;

  // Norms within 1e-5 of 1 and no two centroids bit-identical.
  // Throws ErrorKind::validation.
  void validate() const;

 private:
  std::uint32_t dim_ = 0;
  std::vector<float> data_;
};

/// k-means++ seeding under cosine distance d = 1 - <x, c>: the first centre is
/// a uniformly drawn row, each further centre is drawn with probability
/// proportional to d(x)^2, where d(x) is the distance to the nearest chosen
/// centre. Rows bit-identical to a chosen centre have weight zero.
CentroidSet kmeanspp_init(MatrixView rows, std::uint32_t k, std::uint64_t seed, unsigned workers = 1);

/// K distinct rows drawn uniformly without replacement.
CentroidSet random_rows_init(MatrixView rows, std::uint32_t k, std::uint64_t seed);

/// Lloyd iterations on the unit sphere maximizing sum_x <x, mu_label(x)>.
///
/// Assignment is argmax cosine (smallest index on ties); the update is the
/// re-normalized mean of the assigned rows. A cluster left empty is re-seeded
/// with the worst-fitting row (lowest similarity to its own centroid).
/// Stops after max_iters updates or when the relative gain falls below tol.
/// An update that would lower the objective through rounding is discarded and
/// ends the run, so `meta.history` is non-decreasing.
///
/// Results are bit-identical for any `workers`. When `final_labels` /
/// `final_sims` are given they receive the assignment to the returned
/// centroids (sized rows.rows).
CentroidSet spherical_kmeans(MatrixView rows, const ClusterConfig& config, unsigned workers = 1,
                             std::vector<std::uint32_t>* final_labels = nullptr,
                             std::vector<float>* final_sims = nullptr);

/// sum_x max_k <x, mu_k>.
double cluster_objective(MatrixView rows, const CentroidSet& centroids, unsigned workers = 1);

/// Hard assignment of rows to centroids, computed in parallel row ranges.
void assign_rows(MatrixView rows, const CentroidSet& centroids, std::span<std::uint32_t> labels,
                 std::span<float> sims, unsigned workers = 1);

/// Centroids in the embedding format (ids c0..cK-1) plus `<path>.meta`
/// holding `key<TAB>value` lines.
void save_centroids(const CentroidSet& centroids, const std::filesystem::path& path);
CentroidSet load_centroids(const std::filesystem::path& path);

}  // namespace rsprune
