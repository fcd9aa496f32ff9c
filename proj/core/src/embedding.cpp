#include "rsprune/embedding.hpp"

#include <unistd.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <unordered_set>

#include "rsprune/errors.hpp"
#include "rsprune/parallel.hpp"

namespace rsprune {

namespace {

constexpr std::array<char, 8> kMagic = {'P', 'R', 'N', 'F', 'R', 'G', '0', '1'};

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

template <typename T>
void put(std::ostream& out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return to_little(v);
}

void write_floats(std::ostream& out, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (float f : values) put(out, f);
  }
}

void fix_float_order(std::span<float> values) {
  if constexpr (std::endian::native == std::endian::big) {
    for (float& f : values) f = to_little(f);
  }
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids, std::uint32_t dim, std::vector<float> data)
    : ids_(std::move(ids)), dim_(dim), data_(std::move(data)) {
  if (ids_.size() * dim_ != data_.size()) {
    fail(ErrorKind::alignment, std::to_string(ids_.size()) + " ids for " + std::to_string(data_.size()) +
                                   " floats at dim " + std::to_string(dim_));
  }
  if (dim_ == 0 && !ids_.empty()) fail(ErrorKind::validation, "embedding dimension must be > 0");
  std::unordered_set<std::string_view> seen;
  seen.reserve(ids_.size());
  for (const auto& id : ids_) {
    if (id.empty()) fail(ErrorKind::validation, "empty embedding id");
    if (id.find_first_of("\n\r") != std::string::npos) {
      fail(ErrorKind::validation, "embedding id contains newline");
    }
    if (!seen.insert(id).second) fail(ErrorKind::validation, "duplicate embedding id '" + id + "'");
  }
}

std::unordered_map<std::string_view, std::size_t> build_id_index(const std::vector<std::string>& ids) {
  std::unordered_map<std::string_view, std::size_t> index;
  index.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);
  return index;
}

EmbeddingMatrix EmbeddingMatrix::select_rows(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  std::vector<float> data;
  ids.reserve(rows.size());
  data.reserve(rows.size() * dim_);
  for (auto r : rows) {
    ids.push_back(ids_.at(r));
    auto src = row(r);
    data.insert(data.end(), src.begin(), src.end());
  }
  return EmbeddingMatrix(std::move(ids), dim_, std::move(data));
}

fs::path ids_sidecar_path(const fs::path& path) {
  fs::path p = path;
  p += ".ids";
  return p;
}

// ---------------------------------------------------------------------------

EmbeddingReader::EmbeddingReader(const fs::path& path) : path_(path) {
  in_.open(path, std::ios::binary);
  if (!in_) fail(ErrorKind::io, "cannot open embeddings: " + path.string());

  std::array<unsigned char, kEmbeddingHeaderBytes> header{};
  in_.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in_.gcount() != static_cast<std::streamsize>(header.size())) {
    fail(ErrorKind::format, path.string() + ": file shorter than header");
  }
  if (std::memcmp(header.data(), kMagic.data(), kMagic.size()) != 0) {
    fail(ErrorKind::format, path.string() + ": bad magic");
  }
  const auto version = get<std::uint32_t>(header.data() + 8);
  if (version != kEmbeddingVersion) {
    fail(ErrorKind::format, path.string() + ": unsupported version " + std::to_string(version));
  }
  const auto rows = get<std::uint64_t>(header.data() + 12);
  dim_ = get<std::uint32_t>(header.data() + 20);
  const auto reserved = get<std::uint32_t>(header.data() + 24);
  if (reserved != 0) fail(ErrorKind::format, path.string() + ": reserved header field is not 0");

  const auto size = fs::file_size(path);
  const auto payload = size - kEmbeddingHeaderBytes;
  if (dim_ == 0 && rows != 0) fail(ErrorKind::corruption, path.string() + ": dim 0 with rows");
  const std::uint64_t expected = rows * std::uint64_t{dim_} * sizeof(float);
  if (payload != expected) {
    fail(ErrorKind::corruption, path.string() + ": header declares " + std::to_string(rows) + " x " +
                                    std::to_string(dim_) + " (" + std::to_string(expected) +
                                    " payload bytes) but file holds " + std::to_string(payload));
  }
  rows_ = static_cast<std::size_t>(rows);

  const auto ids_path = ids_sidecar_path(path);
  std::ifstream ids(ids_path, std::ios::binary);
  if (!ids) fail(ErrorKind::alignment, "missing id sidecar " + ids_path.string());
  ids_.reserve(rows_);
  std::string line;
  while (std::getline(ids, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ids_.push_back(std::move(line));
  }
  if (ids_.size() != rows_) {
    fail(ErrorKind::alignment, ids_path.string() + " has " + std::to_string(ids_.size()) +
                                   " ids for " + std::to_string(rows_) + " rows");
  }
}

void EmbeddingReader::read_rows(std::size_t begin, std::size_t count, std::span<float> out) {
  if (begin + count > rows_) fail(ErrorKind::precondition, "row range past end of " + path_.string());
  if (out.size() != count * dim_) fail(ErrorKind::precondition, "output span has wrong size");
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(kEmbeddingHeaderBytes + begin * std::size_t{dim_} * sizeof(float)));
  in_.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size_bytes()));
  if (in_.gcount() != static_cast<std::streamsize>(out.size_bytes())) {
    fail(ErrorKind::corruption, path_.string() + ": short read");
  }
  fix_float_order(out);
}

std::vector<float> EmbeddingReader::read_rows(std::size_t begin, std::size_t count) {
  std::vector<float> out(count * dim_);
  read_rows(begin, count, out);
  return out;
}

EmbeddingMatrix EmbeddingReader::read_all() {
  return EmbeddingMatrix(ids_, dim_, read_rows(0, rows_));
}

EmbeddingMatrix EmbeddingReader::read_selected(std::span<const std::size_t> rows, std::size_t chunk_rows) {
  // Visit wanted rows in file order, one chunk at a time.
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return rows[a] < rows[b]; });

  std::vector<float> data(rows.size() * dim_);
  std::vector<std::string> ids(rows.size());
  std::vector<float> chunk;
  std::size_t k = 0;
  chunk_rows = std::max<std::size_t>(1, chunk_rows);
  while (k < order.size()) {
    const std::size_t begin = rows[order[k]];
    if (begin >= rows_) fail(ErrorKind::precondition, "row index past end of " + path_.string());
    const std::size_t count = std::min(chunk_rows, rows_ - begin);
    chunk.resize(count * dim_);
    read_rows(begin, count, chunk);
    while (k < order.size() && rows[order[k]] < begin + count) {
      const std::size_t r = rows[order[k]];
      std::copy_n(chunk.data() + (r - begin) * dim_, dim_, data.data() + order[k] * dim_);
      ids[order[k]] = ids_[r];
      ++k;
    }
  }
  return EmbeddingMatrix(std::move(ids), dim_, std::move(data));
}

// ---------------------------------------------------------------------------

namespace {
fs::path temp_sibling(const fs::path& p) {
  fs::path t = p;
  t += ".tmp." + std::to_string(::getpid());
  return t;
}
}  // namespace

EmbeddingWriter::EmbeddingWriter(const fs::path& path, std::size_t rows, std::uint32_t dim)
    : path_(path), temp_data_(temp_sibling(path)), temp_ids_(temp_sibling(ids_sidecar_path(path))),
      rows_(rows), dim_(dim) {
  if (dim == 0 && rows != 0) fail(ErrorKind::validation, "embedding dimension must be > 0");
  data_.open(temp_data_, std::ios::binary | std::ios::trunc);
  ids_.open(temp_ids_, std::ios::binary | std::ios::trunc);
  if (!data_ || !ids_) fail(ErrorKind::io, "cannot open for writing: " + path.string());
  data_.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(data_, kEmbeddingVersion);
  put<std::uint64_t>(data_, rows);
  put<std::uint32_t>(data_, dim);
  put<std::uint32_t>(data_, 0);
}

EmbeddingWriter::~EmbeddingWriter() {
  if (!finished_) {
    data_.close();
    ids_.close();
    std::error_code ec;
    fs::remove(temp_data_, ec);
    fs::remove(temp_ids_, ec);
  }
}

void EmbeddingWriter::append(std::string_view id, std::span<const float> row) {
  if (written_ >= rows_) fail(ErrorKind::validation, "more rows appended than declared");
  if (row.size() != dim_) fail(ErrorKind::validation, "row has wrong dimension");
  if (id.empty() || id.find_first_of("\n\r") != std::string_view::npos) {
    fail(ErrorKind::validation, "bad embedding id");
  }
  write_floats(data_, row);
  ids_.write(id.data(), static_cast<std::streamsize>(id.size()));
  ids_.put('\n');
  ++written_;
}

void EmbeddingWriter::finish() {
  if (written_ != rows_) {
    fail(ErrorKind::validation, "declared " + std::to_string(rows_) + " rows, wrote " + std::to_string(written_));
  }
  data_.flush();
  ids_.flush();
  if (!data_ || !ids_) fail(ErrorKind::io, "write failed: " + path_.string());
  data_.close();
  ids_.close();
  std::error_code ec;
  fs::rename(temp_ids_, ids_sidecar_path(path_), ec);
  if (!ec) fs::rename(temp_data_, path_, ec);
  if (ec) fail(ErrorKind::io, "cannot rename into " + path_.string() + ": " + ec.message());
  finished_ = true;
}

EmbeddingMatrix read_embeddings(const fs::path& path) { return EmbeddingReader(path).read_all(); }

void write_embeddings(const EmbeddingMatrix& m, const fs::path& path, NormPolicy policy) {
  if (policy == NormPolicy::require_unit) {
    if (auto bad = first_non_unit_row(m.view(), 1e-5)) {
      fail(ErrorKind::validation, "row '" + m.ids()[*bad] + "' is not unit-norm");
    }
  }
  EmbeddingWriter w(path, m.rows(), m.dim());
  for (std::size_t i = 0; i < m.rows(); ++i) w.append(m.ids()[i], m.row(i));
  w.finish();
}

double row_norm(std::span<const float> row) {
  double s = 0.0;
  for (float v : row) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

std::optional<std::size_t> first_non_unit_row(MatrixView m, double tol) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    if (std::fabs(row_norm(m.row(i)) - 1.0) > tol) return i;
  }
  return std::nullopt;
}

EmbeddingMatrix l2_normalize(const EmbeddingMatrix& m, unsigned workers) {
  std::vector<float> out(m.data().size());
  std::vector<char> degenerate(m.rows(), 0);
  parallel_for_ranges(m.rows(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto src = m.row(i);
      const double norm = row_norm(src);
      if (!(norm >= 1e-12) || !std::isfinite(norm)) {
        degenerate[i] = 1;
        continue;
      }
      float* dst = out.data() + i * m.dim();
      for (std::uint32_t j = 0; j < m.dim(); ++j) dst[j] = static_cast<float>(src[j] / norm);
    }
  });
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (degenerate[i]) fail(ErrorKind::degenerate, "embedding '" + m.ids()[i] + "' has (near-)zero norm");
  }
  return EmbeddingMatrix(m.ids(), m.dim(), std::move(out));
}

}  // namespace rsprune
