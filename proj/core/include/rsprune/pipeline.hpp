#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rsprune/assign.hpp"
#include "rsprune/cluster.hpp"
#include "rsprune/config.hpp"
#include "rsprune/entropy.hpp"
#include "rsprune/manifest.hpp"
#include "rsprune/sample.hpp"

namespace rsprune {

namespace fs = std::filesystem;

// File names inside the output directory.
namespace outputs {
inline constexpr const char* kKeptManifest = "kept_manifest.tsv";
inline constexpr const char* kScores = "entropy_scores.tsv";
inline constexpr const char* kRejects = "entropy_rejects.tsv";
inline constexpr const char* kCentroids = "centroids.bin";
inline constexpr const char* kAssignments = "assignments.tsv";
inline constexpr const char* kAssignmentCache = "assignments.bin";
inline constexpr const char* kSelection = "selection.tsv";
inline constexpr const char* kSelectionStats = "selection_stats.tsv";
inline constexpr const char* kRunMeta = "run_meta.conf";
}  // namespace outputs

/// Completion marker `<out_dir>/.stage-<name>.done` holding the fingerprint
/// of the stage inputs. A stage is skipped when the marker matches and every
/// listed output still exists.
class StageMarker {
 public:
  StageMarker(fs::path out_dir, std::string stage);

  bool matches(const std::string& fingerprint, const std::vector<fs::path>& produced) const;
  void write(const std::string& fingerprint) const;
  void clear() const;
  const fs::path& path() const noexcept { return path_; }

 private:
  fs::path path_;
};

struct EntropyStageResult {
  DatasetManifest kept;
  std::vector<EntropyScore> scores;
  std::size_t n_original = 0;
  bool skipped = false;
};

/// Stage I over `paths.manifest`, scoring images through `source` or reading
/// `paths.scores` when given. Writes the kept manifest, scores and rejects.
EntropyStageResult run_entropy_stage(const PipelineConfig& config,
                                     const RasterSource& source = decode_record_raster);

/// Loads and concatenates the reference embedding files (ids must be unique
/// across files).
EmbeddingMatrix load_reference(const std::vector<fs::path>& paths);

/// Prior centroids from `paths.reference`, written to centroids.bin.
CentroidSet run_cluster_stage(const PipelineConfig& config, bool* skipped = nullptr);

/// Rows of the embedding file for the manifest's ids, in manifest order.
/// Throws ErrorKind::join listing up to 100 ids that have no embedding.
EmbeddingMatrix join_embeddings(const fs::path& embeddings, const DatasetManifest& manifest);

/// Assignment of `rows` to `centroids`, written as text plus an exact binary
/// cache. `fingerprint_inputs` identify where `rows` came from.
AssignmentTable run_assign_stage(const PipelineConfig& config, const EmbeddingMatrix& rows,
                                 const CentroidSet& centroids, const std::vector<fs::path>& fingerprint_inputs,
                                 bool* skipped = nullptr);

/// Explicit budget, or compute_budget from the pruning ratio. An explicit
/// budget above the stage-I output is infeasible as well.
std::uint64_t resolve_budget(const PipelineConfig& config, std::uint64_t n_after_stage1, std::uint64_t n_original);

struct PipelineRun {
  SelectionResult selection;
  std::uint64_t n_original = 0;
  std::uint64_t n_after_stage1 = 0;
  std::uint64_t budget = 0;
  std::vector<std::string> skipped_stages;
};

/// Stage I, then the configured strategy. Writes the selection, its stats
/// sidecar and run_meta.conf (a config that replays the run) to out_dir.
PipelineRun run_pipeline(const PipelineConfig& config, const RasterSource& source = decode_record_raster);

/// Content fingerprint helper: SHA-256 over `label` and the listed files
/// (plus their `.ids` sidecars when present).
std::string fingerprint_files(const std::string& label, const std::vector<fs::path>& files);

}  // namespace rsprune
