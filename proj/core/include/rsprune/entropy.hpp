#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rsprune/manifest.hpp"
#include "rsprune/raster.hpp"

namespace rsprune {

/// Intensity histogram over `counts.size()` levels.
struct Histogram {
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  std::size_t levels() const noexcept { return counts.size(); }
};

enum class EntropyMode { threshold, top_fraction };

// automatic: luma_601 for exactly three bands, band_mean for everything else.
enum class GrayscalePolicy { automatic, luma_601, band_mean };

struct EntropyConfig {
  EntropyMode mode = EntropyMode::top_fraction;
  double tau = 0.0;            // bits; threshold mode only
  double keep_fraction = 1.0;  // (0, 1]; top_fraction mode only
  std::uint32_t levels = 256;
  GrayscalePolicy grayscale = GrayscalePolicy::automatic;

  // Throws ErrorKind::config.
  void validate() const;
};

std::string_view to_string(EntropyMode mode) noexcept;
std::string_view to_string(GrayscalePolicy policy) noexcept;
EntropyMode parse_entropy_mode(std::string_view text);
GrayscalePolicy parse_grayscale_policy(std::string_view text);

/// Grayscale reduction followed by linear quantization to `config.levels`.
///
/// luma_601 weights the first three bands 0.299/0.587/0.114; band_mean averages
/// every band. The reduced value is rounded half up to a native sample value
/// and mapped to level floor(v * L / (max_value + 1)).
Histogram grayscale_histogram(const Raster& image, const EntropyConfig& config);

/// -sum p_k log2 p_k over non-empty levels, in bits.
double shannon_entropy(const Histogram& h);

/// ceil(fraction * n), treating products within 1e-9 of an integer as that
/// integer so 0.3 * 10 keeps 3 rather than 4.
std::uint64_t count_for_fraction(double fraction, std::uint64_t n);

struct EntropyScore {
  std::string id;
  double bits = 0.0;
};

struct EntropyReject {
  std::string id;
  std::string reason;
};

/// Applies the stage-I retention rule to already-computed scores. Returns one
/// flag per score. threshold: H >= tau. top_fraction: the ceil(p * n) highest,
/// ties broken by ascending id.
std::vector<bool> select_by_entropy(std::span<const EntropyScore> scores, const EntropyConfig& config);

struct EntropyFilterResult {
  DatasetManifest kept;
  std::vector<EntropyScore> scores;  // manifest order, decodable records only
  std::vector<EntropyReject> rejects;

  std::unordered_map<std::string, double> score_map() const;
};

using RasterSource = std::function<Raster(const SampleRecord&)>;

// Decodes `record.uri` from the local filesystem.
Raster decode_record_raster(const SampleRecord& record);

/// Scores every record and applies the retention rule. Records whose raster
/// fails to load are reported in `rejects` and treated as pruned. Output is
/// independent of `workers`.
EntropyFilterResult entropy_filter(const DatasetManifest& manifest, const EntropyConfig& config,
                                   const RasterSource& source = decode_record_raster,
                                   unsigned workers = 1);

/// Same rule using externally supplied scores (e.g. a previous scores sidecar).
/// Records without a score are rejected with reason "no score".
EntropyFilterResult entropy_filter_scored(const DatasetManifest& manifest,
                                          std::span<const EntropyScore> scores,
                                          const EntropyConfig& config);

// `id<TAB>bits` at 6 decimals.
void write_scores(std::span<const EntropyScore> scores, const std::filesystem::path& path);
std::vector<EntropyScore> read_scores(const std::filesystem::path& path);
// `id<TAB>reason`.
void write_rejects(std::span<const EntropyReject> rejects, const std::filesystem::path& path);

}  // namespace rsprune
