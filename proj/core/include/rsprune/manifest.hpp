#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace rsprune {

namespace fs = std::filesystem;

/// One image in a corpus. Unknown width/height/bands are 0.
struct SampleRecord {
  std::string id;
  std::string uri;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t bands = 0;
  std::vector<std::pair<std::string, std::string>> tags;

  bool operator==(const SampleRecord&) const = default;
};

/// Ordered, id-unique collection of records.
///
/// Records keep insertion order; `find` is backed by an id index that is
/// rebuilt whenever records are added. A loaded manifest is immutable and may
/// be shared across threads.
class DatasetManifest {
 public:
  DatasetManifest() = default;
  explicit DatasetManifest(std::string source_label) : source_label_(std::move(source_label)) {}

  // Throws ErrorKind::validation on a bad or duplicate id.
  void add(SampleRecord record);

  const std::vector<SampleRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  const std::string& source_label() const noexcept { return source_label_; }
  void set_source_label(std::string label) { source_label_ = std::move(label); }

  const SampleRecord* find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }

  // Keeps records whose id passes `keep`, in original order.
  DatasetManifest filter(const std::function<bool(const SampleRecord&)>& keep) const;

  bool operator==(const DatasetManifest& other) const {
    return source_label_ == other.source_label_ && records_ == other.records_;
  }

 private:
  std::string source_label_;
  std::vector<SampleRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Streams records from a manifest file without materializing them.
/// Returns the source label (empty if the file carries none).
std::string for_each_record(const fs::path& path,
                            const std::function<void(SampleRecord&&, std::size_t line)>& fn);

DatasetManifest load_manifest(const fs::path& path);
void write_manifest(const DatasetManifest& manifest, const fs::path& path);

std::string encode_record(const SampleRecord& record);
SampleRecord decode_record(std::string_view line, std::size_t lineno);

// ---------------------------------------------------------------------------
// Selection output

enum class Stage { entropy, cluster_sample, baseline };

std::string_view to_string(Stage stage) noexcept;
std::optional<Stage> parse_stage(std::string_view text) noexcept;

struct SelectionEntry {
  std::string id;
  Stage stage = Stage::cluster_sample;
  std::optional<std::uint32_t> cluster;
  std::optional<std::uint64_t> rank_in_cluster;
  std::optional<double> similarity;
  std::optional<double> entropy_bits;

  bool operator==(const SelectionEntry&) const = default;
};

// Throws ErrorKind::validation naming the offending entry.
void validate_selection_entry(const SelectionEntry& entry);
// Also checks that every id exists in `manifest`.
void validate_selection(std::span<const SelectionEntry> entries, const DatasetManifest& manifest);

/// Writes `id stage cluster rank similarity entropy_bits`, tab-separated, with
/// reals at 6 decimals and `-` for absent fields. Validation happens before
/// anything touches the filesystem; the file appears via atomic rename.
void write_selection(std::span<const SelectionEntry> entries, const fs::path& path);
std::vector<SelectionEntry> read_selection(const fs::path& path);

}  // namespace rsprune
