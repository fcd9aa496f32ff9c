#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rsprune {

namespace fs = std::filesystem;

/// Non-owning row-major float matrix.
struct MatrixView {
  std::span<const float> data;
  std::size_t rows = 0;
  std::uint32_t dim = 0;

  std::span<const float> row(std::size_t i) const { return data.subspan(i * dim, dim); }
  MatrixView slice(std::size_t begin, std::size_t count) const {
    return {data.subspan(begin * dim, count * dim), count, dim};
  }
};

/// N x dim row-major float32 embeddings with one id per row.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  // Throws ErrorKind::alignment if ids.size() * dim != data.size(),
  // ErrorKind::validation on duplicate or empty ids.
  EmbeddingMatrix(std::vector<std::string> ids, std::uint32_t dim, std::vector<float> data);

  std::size_t rows() const noexcept { return ids_.size(); }
  std::uint32_t dim() const noexcept { return dim_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::vector<float>& data() const noexcept { return data_; }

  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<float> mutable_row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  MatrixView view() const { return {data_, rows(), dim_}; }

  // New matrix holding the given rows in the given order.
  EmbeddingMatrix select_rows(std::span<const std::size_t> rows) const;

  bool operator==(const EmbeddingMatrix& other) const {
    return dim_ == other.dim_ && ids_ == other.ids_ && data_ == other.data_;
  }

 private:
  std::vector<std::string> ids_;
  std::uint32_t dim_ = 0;
  std::vector<float> data_;
};

// id -> row. Views point into `ids`, which must outlive the map.
std::unordered_map<std::string_view, std::size_t> build_id_index(const std::vector<std::string>& ids);

// ---------------------------------------------------------------------------
// Binary interchange format
//
//   offset  size  field
//        0     8  magic "PRNFRG01"
//        8     4  u32 version (1)
//       12     8  u64 rows
//       20     4  u32 dim
//       24     4  u32 reserved (0)
//       28     -  rows * dim float32, row-major
//
// All integers and floats little-endian. Row ids live in `<path>.ids`, one
// per line.

inline constexpr std::size_t kEmbeddingHeaderBytes = 28;
inline constexpr std::uint32_t kEmbeddingVersion = 1;

fs::path ids_sidecar_path(const fs::path& path);

enum class NormPolicy { require_unit, allow_raw };

/// Random-access reader over an embedding file. The header, payload length
/// and id sidecar are validated on open; rows are read on demand so large
/// files never need to be resident.
class EmbeddingReader {
 public:
  explicit EmbeddingReader(const fs::path& path);

  std::size_t rows() const noexcept { return rows_; }
  std::uint32_t dim() const noexcept { return dim_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  // Reads rows [begin, begin + count) into `out` (count * dim floats).
  void read_rows(std::size_t begin, std::size_t count, std::span<float> out);
  std::vector<float> read_rows(std::size_t begin, std::size_t count);

  EmbeddingMatrix read_all();
  // Gathers the given rows (any order) into a matrix, reading in chunks.
  EmbeddingMatrix read_selected(std::span<const std::size_t> rows, std::size_t chunk_rows = 65536);

 private:
  fs::path path_;
  std::ifstream in_;
  std::size_t rows_ = 0;
  std::uint32_t dim_ = 0;
  std::vector<std::string> ids_;
};

/// Streaming writer; rows must be appended in order and `finish` called once
/// exactly `rows` rows were written. The data file and sidecar appear via
/// atomic rename.
class EmbeddingWriter {
 public:
  EmbeddingWriter(const fs::path& path, std::size_t rows, std::uint32_t dim);
  ~EmbeddingWriter();
  EmbeddingWriter(const EmbeddingWriter&) = delete;
  EmbeddingWriter& operator=(const EmbeddingWriter&) = delete;

  void append(std::string_view id, std::span<const float> row);
  void finish();

 private:
  fs::path path_;
  fs::path temp_data_;
  fs::path temp_ids_;
  std::ofstream data_;
  std::ofstream ids_;
  std::size_t rows_;
  std::uint32_t dim_;
  std::size_t written_ = 0;
  bool finished_ = false;
};

EmbeddingMatrix read_embeddings(const fs::path& path);
void write_embeddings(const EmbeddingMatrix& m, const fs::path& path,
                      NormPolicy policy = NormPolicy::require_unit);

/// Row-wise z / ||z||_2, computed in double and rounded once to float.
/// Throws ErrorKind::degenerate naming the id of any row with norm < 1e-12.
EmbeddingMatrix l2_normalize(const EmbeddingMatrix& m, unsigned workers = 1);

double row_norm(std::span<const float> row);

/// Index of the first row whose norm differs from 1 by more than `tol`.
std::optional<std::size_t> first_non_unit_row(MatrixView m, double tol);

}  // namespace rsprune
