#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rsprune/cluster.hpp"
#include "rsprune/entropy.hpp"

namespace rsprune {

namespace fs = std::filesystem;

// Raw `section.key = value` entries. Relative paths are resolved against the
// directory of the file (or the working directory for overrides).
class ConfigEntries {
 public:
  struct Entry {
    std::string value;
    fs::path base_dir;
    std::string origin;  // "file:line" or "override"
  };

  // Throws ErrorKind::config on a malformed line or a key given twice.
  static ConfigEntries parse(std::string_view text, const fs::path& base_dir, const std::string& origin);
  static ConfigEntries load(const fs::path& path);

  // Later values replace earlier ones.
  void set(const std::string& key, std::string value, fs::path base_dir = fs::current_path());
  void merge(const ConfigEntries& other);

  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }
  bool contains(const std::string& key) const { return entries_.count(key) != 0; }

 private:
  std::map<std::string, Entry> entries_;
};

inline constexpr std::string_view kStrategyPrimary = "primary";

struct PipelineConfig {
  struct Paths {
    fs::path manifest;
    fs::path embeddings;
    std::vector<fs::path> reference;
    fs::path scores;  // optional precomputed entropy scores
    fs::path out_dir;
  } paths;

  EntropyConfig entropy;
  ClusterConfig cluster;  // cluster.seed is derived from `seed`
  std::optional<double> pruning_ratio;
  std::optional<std::uint64_t> budget;
  std::string strategy{kStrategyPrimary};
  std::uint64_t seed = 0;
  unsigned workers = 1;

  // Keys that were filled from defaults, as "key = value".
  std::vector<std::string> defaults_applied;
};

/// Every recognized key, in canonical order.
const std::vector<std::string>& config_keys();

/// Resolves entries into a config, applying and recording defaults.
/// Unknown keys and constraint violations are reported together in a single
/// ErrorKind::config error, one item per line. Paths that are given must exist
/// when `check_paths` is set. Giving both sampling keys is always an error;
/// giving neither only when `require_sampling` is set.
PipelineConfig resolve_config(const ConfigEntries& entries, bool check_paths = true, bool require_sampling = true);

/// load + resolve + the checks a full pipeline run needs (required paths for
/// the chosen strategy).
PipelineConfig validate_config(const fs::path& path, const ConfigEntries& overrides = {});
void require_pipeline_inputs(const PipelineConfig& config);

/// Human-readable validation report listing resolved values and defaults.
std::string validation_report(const PipelineConfig& config);

/// Config text that resolves back to `config` (absolute paths, every key).
std::string render_config(const PipelineConfig& config);

}  // namespace rsprune
