#include "rsprune/assign.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "rsprune/errors.hpp"
#include "rsprune/parallel.hpp"
#include "rsprune/text_io.hpp"

namespace rsprune {

void AssignmentTable::validate() const {
  if (labels.size() != ids.size() || sims.size() != ids.size()) {
    fail(ErrorKind::validation, "assignment table columns differ in length");
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (labels[i] >= k) {
      fail(ErrorKind::validation, "label " + std::to_string(labels[i]) + " of '" + ids[i] + "' >= k");
    }
  }
}

namespace {

void check_inputs(MatrixView rows, const CentroidSet& c) {
  if (rows.dim != c.dim()) {
    fail(ErrorKind::precondition, "dimension mismatch: embeddings " + std::to_string(rows.dim) +
                                      ", centroids " + std::to_string(c.dim()));
  }
  if (c.k() == 0) fail(ErrorKind::precondition, "no centroids");
  if (auto bad = first_non_unit_row(c.view(), 1e-4)) {
    fail(ErrorKind::precondition, "centroid " + std::to_string(*bad) + " is not unit-norm");
  }
}

}  // namespace

AssignmentTable assign_nearest(const EmbeddingMatrix& m, const CentroidSet& c, unsigned workers) {
  check_inputs(m.view(), c);
  if (auto bad = first_non_unit_row(m.view(), 1e-4)) {
    fail(ErrorKind::precondition, "embedding '" + m.ids()[*bad] + "' is not unit-norm");
  }
  AssignmentTable t;
  t.ids = m.ids();
  t.k = static_cast<std::uint32_t>(c.k());
  t.labels.resize(m.rows());
  t.sims.resize(m.rows());
  assign_rows(m.view(), c, t.labels, t.sims, workers);
  return t;
}

AssignmentTable assign_nearest(EmbeddingReader& reader, const CentroidSet& c, std::size_t chunk_rows,
                               unsigned workers) {
  chunk_rows = std::max<std::size_t>(1, chunk_rows);
  AssignmentTable t;
  t.ids = reader.ids();
  t.k = static_cast<std::uint32_t>(c.k());
  t.labels.resize(reader.rows());
  t.sims.resize(reader.rows());
  std::vector<float> chunk;
  for (std::size_t begin = 0; begin < reader.rows(); begin += chunk_rows) {
    const std::size_t count = std::min(chunk_rows, reader.rows() - begin);
    chunk.resize(count * reader.dim());
    reader.read_rows(begin, count, chunk);
    const MatrixView view{chunk, count, reader.dim()};
    check_inputs(view, c);
    if (auto bad = first_non_unit_row(view, 1e-4)) {
      fail(ErrorKind::precondition, "embedding '" + t.ids[begin + *bad] + "' is not unit-norm");
    }
    assign_rows(view, c, std::span(t.labels).subspan(begin, count), std::span(t.sims).subspan(begin, count),
                workers);
  }
  return t;
}

std::size_t CandidatePools::total() const noexcept {
  std::size_t n = 0;
  for (const auto& p : pools) n += p.size();
  return n;
}

CandidatePools pool_by_cluster(const AssignmentTable& table, unsigned workers) {
  table.validate();
  CandidatePools out;
  out.ids = table.ids;
  out.pools.resize(table.k);
  for (std::size_t i = 0; i < table.size(); ++i) out.pools[table.labels[i]].push_back({i, table.sims[i]});
  const auto& ids = out.ids;
  parallel_for_ranges(out.pools.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      std::sort(out.pools[k].begin(), out.pools[k].end(), [&](const PoolMember& a, const PoolMember& b) {
        return higher_priority(a.sim, ids[a.row], b.sim, ids[b.row]);
      });
    }
  });
  return out;
}

void write_assignments(const AssignmentTable& table, const std::filesystem::path& path) {
  table.validate();
  AtomicFileWriter w(path);
  auto& out = w.stream();
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.ids[i] << '\t' << table.labels[i] << '\t' << format_fixed(table.sims[i], 6) << '\n';
  }
  w.commit();
}

AssignmentTable read_assignments(const std::filesystem::path& path, std::uint32_t k) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open assignments: " + path.string());
  AssignmentTable t;
  std::string line;
  std::size_t lineno = 0;
  std::uint32_t max_label = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split(line, '\t');
    auto label = f.size() == 3 ? parse_u64(f[1]) : std::nullopt;
    auto sim = f.size() == 3 ? parse_double(f[2]) : std::nullopt;
    if (!label || !sim || f[0].empty()) {
      fail(ErrorKind::parse, path.string() + " line " + std::to_string(lineno) + ": expected id<TAB>label<TAB>sim");
    }
    t.ids.emplace_back(f[0]);
    t.labels.push_back(static_cast<std::uint32_t>(*label));
    t.sims.push_back(static_cast<float>(*sim));
    max_label = std::max(max_label, t.labels.back());
  }
  t.k = k != 0 ? k : (t.ids.empty() ? 0 : max_label + 1);
  t.validate();
  return t;
}

namespace {
constexpr std::array<char, 8> kCacheMagic = {'P', 'R', 'N', 'A', 'S', 'G', '0', '1'};
}

void write_assignment_cache(const AssignmentTable& table, const std::filesystem::path& path) {
  table.validate();
  static_assert(std::endian::native == std::endian::little, "assignment cache assumes little-endian host");
  {
    std::string ids;
    for (const auto& id : table.ids) {
      ids += id;
      ids += '\n';
    }
    write_text_atomic(ids_sidecar_path(path), ids);
  }
  AtomicFileWriter w(path);
  auto& out = w.stream();
  out.write(kCacheMagic.data(), kCacheMagic.size());
  const std::uint32_t k = table.k;
  const std::uint64_t n = table.size();
  out.write(reinterpret_cast<const char*>(&k), sizeof k);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(table.labels.data()),
            static_cast<std::streamsize>(table.labels.size() * sizeof(std::uint32_t)));
  out.write(reinterpret_cast<const char*>(table.sims.data()),
            static_cast<std::streamsize>(table.sims.size() * sizeof(float)));
  w.commit();
}

AssignmentTable read_assignment_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open assignment cache: " + path.string());
  std::array<char, 8> magic{};
  std::uint32_t k = 0;
  std::uint64_t n = 0;
  in.read(magic.data(), magic.size());
  in.read(reinterpret_cast<char*>(&k), sizeof k);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || magic != kCacheMagic) fail(ErrorKind::format, path.string() + ": not an assignment cache");
  AssignmentTable t;
  t.k = k;
  t.labels.resize(n);
  t.sims.resize(n);
  in.read(reinterpret_cast<char*>(t.labels.data()), static_cast<std::streamsize>(n * sizeof(std::uint32_t)));
  in.read(reinterpret_cast<char*>(t.sims.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (!in) fail(ErrorKind::corruption, path.string() + ": truncated assignment cache");
  std::ifstream ids(ids_sidecar_path(path), std::ios::binary);
  std::string line;
  while (std::getline(ids, line)) t.ids.push_back(line);
  if (t.ids.size() != n) fail(ErrorKind::alignment, path.string() + ": id sidecar does not match rows");
  t.validate();
  return t;
}

}  // namespace rsprune
