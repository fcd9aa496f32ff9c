#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rsprune {

namespace fs = std::filesystem;

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Locale-independent fixed-point rendering ("%.6f" semantics).
std::string format_fixed(double value, int decimals = 6);

// Shortest text that round-trips the double exactly.
std::string format_exact(double value);

std::optional<double> parse_double(std::string_view text);
std::optional<std::uint64_t> parse_u64(std::string_view text);
std::optional<std::int64_t> parse_i64(std::string_view text);

std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

// Writes into a sibling temporary file and renames it over the target on
// commit(). An uncommitted writer removes its temporary on destruction.
class AtomicFileWriter {
 public:
  explicit AtomicFileWriter(fs::path target);
  ~AtomicFileWriter();
  AtomicFileWriter(const AtomicFileWriter&) = delete;
  AtomicFileWriter& operator=(const AtomicFileWriter&) = delete;

  std::ofstream& stream() { return out_; }
  void commit();

 private:
  fs::path target_;
  fs::path temp_;
  std::ofstream out_;
  bool committed_ = false;
};

void write_text_atomic(const fs::path& path, std::string_view content);
std::string read_text(const fs::path& path);

// `key<TAB>value` lines.
void write_key_values(const fs::path& path, const KeyValues& kv);
KeyValues read_key_values(const fs::path& path);

std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const fs::path& path);

}  // namespace rsprune
