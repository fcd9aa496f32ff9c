#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rsprune/cluster.hpp"
#include "rsprune/sample.hpp"
#include "rsprune/synthetic.hpp"
#include "rsprune/text_io.hpp"

namespace rsprune {

// --- coverage metrics -------------------------------------------------------
// Always computed against generator labels, never the method's own clusters.

double adjusted_rand_index(std::span<const std::int64_t> a, std::span<const std::int64_t> b);

/// Fraction of components 0..k_true-1 with at least one selected row.
double component_recall(std::span<const std::int32_t> true_labels, std::span<const std::size_t> selected,
                        std::uint32_t k_true);

/// Mean over selected rows of the maximum cosine to any other selected row.
double redundancy(MatrixView m, std::span<const std::size_t> selected);

/// Rows of `m` named by the selection, in selection order.
std::vector<std::size_t> selected_rows(const EmbeddingMatrix& m, const SelectionResult& selection);

// --- timing -----------------------------------------------------------------

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least squares of log(y) on log(x).
LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y);

struct ScalingPoint {
  std::size_t n = 0;
  double assign_seconds = 0.0;      // nearest-centroid kernel only
  double end_to_end_seconds = 0.0;  // assign_nearest + pool + select at 15% of n
};

struct ScalingStudy {
  std::uint32_t k = 0;
  std::uint32_t dim = 0;
  std::vector<ScalingPoint> points;
  LogLogFit assign_fit;
  LogLogFit end_to_end_fit;
};

/// Times stage II (priors fixed) on random unit data at each size; each time
/// is the minimum of `repeats` runs. Sizes must be >= 3 and increasing.
ScalingStudy run_scaling_study(std::span<const std::size_t> sizes, std::uint32_t k, std::uint32_t dim,
                               std::uint64_t seed, unsigned workers = 1, unsigned repeats = 3);

/// Minimum-of-repeats wall time of assigning the same n random rows to each
/// of `ks` random centroid sets; repeats cycle through the sets in turn.
std::vector<double> time_assignment(std::size_t n, std::span<const std::uint32_t> ks, std::uint32_t dim,
                                    std::uint64_t seed, unsigned workers = 1, unsigned repeats = 3);

struct RouteTiming {
  double reference_guided_seconds = 0.0;  // cluster reference + assign + pool + select
  double full_corpus_seconds = 0.0;       // cluster corpus + pool + select
  std::uint32_t reference_iterations = 0;
  std::uint32_t full_iterations = 0;
  std::size_t reference_selected = 0;
  std::size_t full_selected = 0;
};

/// Stage-II cost with prior centroids versus clustering the corpus itself,
/// using the same cluster config (K, caps, seed) for both routes.
RouteTiming compare_clustering_routes(const EmbeddingMatrix& corpus, const EmbeddingMatrix& reference,
                                      const ClusterConfig& config, std::uint64_t budget, unsigned workers = 1);

// --- strategy comparison ----------------------------------------------------

struct StrategyMetrics {
  std::string name;
  std::size_t selected = 0;
  double recall = 0.0;
  double redundancy = 0.0;
  double seconds = 0.0;
};

struct StrategyComparison {
  std::uint64_t budget = 0;
  std::vector<StrategyMetrics> strategies;  // primary, random, moderate_ds, cluster_nearest

  const StrategyMetrics& get(std::string_view name) const;
};

/// Runs the primary method (with `prior` centroids) and every baseline at the
/// same budget on `corpus`.
StrategyComparison compare_strategies(const SyntheticCorpus& corpus, const CentroidSet& prior,
                                      std::uint64_t budget, std::uint64_t seed, unsigned workers = 1);

// --- reports ----------------------------------------------------------------

KeyValues to_report(const ScalingStudy& study);
KeyValues to_report(const StrategyComparison& comparison);
void write_report(const KeyValues& report, const std::filesystem::path& path);
/// One row per scaling point: n,assign_seconds,end_to_end_seconds.
void write_scaling_csv(const ScalingStudy& study, const std::filesystem::path& path);

}  // namespace rsprune
