#include "rsprune/manifest.hpp"

#include <fstream>
#include <limits>

#include "rsprune/errors.hpp"
#include "rsprune/text_io.hpp"

namespace rsprune {

namespace {

constexpr std::string_view kLabelDirective = "#source_label\t";

bool has_forbidden_chars(std::string_view s) {
  return s.find_first_of("\t\n\r") != std::string_view::npos;
}

void check_field(std::string_view what, std::string_view value, std::string_view id) {
  if (has_forbidden_chars(value)) {
    fail(ErrorKind::validation,
         "record '" + std::string(id) + "': " + std::string(what) + " contains tab or newline");
  }
}

void validate_record(const SampleRecord& r) {
  if (r.id.empty()) fail(ErrorKind::validation, "record with empty id");
  if (r.id.front() == '#') fail(ErrorKind::validation, "id may not start with '#': " + r.id);
  check_field("id", r.id, r.id);
  check_field("uri", r.uri, r.id);
  for (const auto& [k, v] : r.tags) {
    if (k.empty()) fail(ErrorKind::validation, "record '" + r.id + "': empty tag key");
    check_field("tag key", k, r.id);
    check_field("tag value", v, r.id);
  }
}

std::uint32_t parse_dimension(std::string_view field, std::string_view name, std::size_t lineno) {
  auto v = parse_u64(field);
  if (!v || *v > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorKind::parse, "line " + std::to_string(lineno) + ": " + std::string(name) +
                               " is not a non-negative integer: '" + std::string(field) + "'");
  }
  return static_cast<std::uint32_t>(*v);
}

}  // namespace

void DatasetManifest::add(SampleRecord record) {
  validate_record(record);
  auto [it, inserted] = index_.emplace(record.id, records_.size());
  if (!inserted) fail(ErrorKind::validation, "duplicate id '" + record.id + "'");
  records_.push_back(std::move(record));
}

const SampleRecord* DatasetManifest::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &records_[it->second];
}

DatasetManifest DatasetManifest::filter(const std::function<bool(const SampleRecord&)>& keep) const {
  DatasetManifest out(source_label_);
  for (const auto& r : records_) {
    if (keep(r)) out.add(r);
  }
  return out;
}

std::string encode_record(const SampleRecord& r) {
  std::string line = r.id;
  line += '\t';
  line += r.uri;
  line += '\t';
  line += std::to_string(r.width);
  line += '\t';
  line += std::to_string(r.height);
  line += '\t';
  line += std::to_string(r.bands);
  for (const auto& [k, v] : r.tags) {
    line += '\t';
    line += k;
    line += '\t';
    line += v;
  }
  return line;
}

SampleRecord decode_record(std::string_view line, std::size_t lineno) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  auto fields = split(line, '\t');
  const auto where = "line " + std::to_string(lineno);
  if (fields.size() < 5) {
    fail(ErrorKind::parse, where + ": expected at least 5 tab-separated fields, got " +
                               std::to_string(fields.size()));
  }
  if ((fields.size() - 5) % 2 != 0) fail(ErrorKind::parse, where + ": tag fields must come in key/value pairs");
  if (fields[0].empty()) fail(ErrorKind::parse, where + ": empty id");

  SampleRecord r;
  r.id = fields[0];
  r.uri = fields[1];
  r.width = parse_dimension(fields[2], "width", lineno);
  r.height = parse_dimension(fields[3], "height", lineno);
  r.bands = parse_dimension(fields[4], "bands", lineno);
  for (std::size_t i = 5; i < fields.size(); i += 2) {
    if (fields[i].empty()) fail(ErrorKind::parse, where + ": empty tag key");
    r.tags.emplace_back(std::string(fields[i]), std::string(fields[i + 1]));
  }
  return r;
}

std::string for_each_record(const fs::path& path,
                            const std::function<void(SampleRecord&&, std::size_t line)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open manifest: " + path.string());
  std::string label;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    if (line.front() == '#') {
      if (line.starts_with(kLabelDirective)) label = trim(line.substr(kLabelDirective.size()));
      continue;
    }
    fn(decode_record(line, lineno), lineno);
  }
  return label;
}

DatasetManifest load_manifest(const fs::path& path) {
  DatasetManifest m;
  auto label = for_each_record(path, [&](SampleRecord&& r, std::size_t lineno) {
    if (m.contains(r.id)) {
      fail(ErrorKind::validation, "duplicate id '" + r.id + "' at line " + std::to_string(lineno));
    }
    try {
      m.add(std::move(r));
    } catch (const Error& e) {
      fail(e.kind(), "line " + std::to_string(lineno) + ": " + e.what());
    }
  });
  m.set_source_label(std::move(label));
  return m;
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  if (has_forbidden_chars(manifest.source_label())) {
    fail(ErrorKind::validation, "source label contains tab or newline");
  }
  AtomicFileWriter w(path);
  auto& out = w.stream();
  if (!manifest.source_label().empty()) out << kLabelDirective << manifest.source_label() << '\n';
  for (const auto& r : manifest.records()) out << encode_record(r) << '\n';
  w.commit();
}

// ---------------------------------------------------------------------------

std::string_view to_string(Stage stage) noexcept {
  switch (stage) {
    case Stage::entropy: return "entropy";
    case Stage::cluster_sample: return "cluster_sample";
    case Stage::baseline: return "baseline";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view text) noexcept {
  if (text == "entropy") return Stage::entropy;
  if (text == "cluster_sample") return Stage::cluster_sample;
  if (text == "baseline") return Stage::baseline;
  return std::nullopt;
}

void validate_selection_entry(const SelectionEntry& e) {
  if (e.id.empty()) fail(ErrorKind::validation, "selection entry with empty id");
  if (has_forbidden_chars(e.id)) fail(ErrorKind::validation, "selection id contains tab or newline: " + e.id);
  if (e.stage == Stage::cluster_sample &&
      (!e.cluster || !e.rank_in_cluster || !e.similarity)) {
    fail(ErrorKind::validation,
         "entry '" + e.id + "': stage cluster_sample requires cluster, rank_in_cluster and similarity");
  }
  if (e.similarity && !(*e.similarity >= -1.0 - 1e-6 && *e.similarity <= 1.0 + 1e-6)) {
    fail(ErrorKind::validation, "entry '" + e.id + "': similarity outside [-1, 1]");
  }
  if (e.entropy_bits && !(*e.entropy_bits >= 0.0)) {
    fail(ErrorKind::validation, "entry '" + e.id + "': negative entropy");
  }
}

void validate_selection(std::span<const SelectionEntry> entries, const DatasetManifest& manifest) {
  for (const auto& e : entries) {
    validate_selection_entry(e);
    if (!manifest.contains(e.id)) fail(ErrorKind::validation, "entry '" + e.id + "' not in manifest");
  }
}

namespace {

template <typename T, typename F>
void put_optional(std::string& line, const std::optional<T>& v, F&& render) {
  line += '\t';
  if (v) {
    line += render(*v);
  } else {
    line += '-';
  }
}

}  // namespace

void write_selection(std::span<const SelectionEntry> entries, const fs::path& path) {
  for (const auto& e : entries) validate_selection_entry(e);

  AtomicFileWriter w(path);
  auto& out = w.stream();
  std::string line;
  for (const auto& e : entries) {
    line = e.id;
    line += '\t';
    line += to_string(e.stage);
    put_optional(line, e.cluster, [](auto v) { return std::to_string(v); });
    put_optional(line, e.rank_in_cluster, [](auto v) { return std::to_string(v); });
    put_optional(line, e.similarity, [](double v) { return format_fixed(v, 6); });
    put_optional(line, e.entropy_bits, [](double v) { return format_fixed(v, 6); });
    line += '\n';
    out << line;
  }
  w.commit();
}

std::vector<SelectionEntry> read_selection(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open selection: " + path.string());
  std::vector<SelectionEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split(line, '\t');
    const auto where = path.string() + " line " + std::to_string(lineno);
    if (f.size() != 6) fail(ErrorKind::parse, where + ": expected 6 fields");
    SelectionEntry e;
    e.id = f[0];
    auto stage = parse_stage(f[1]);
    if (!stage) fail(ErrorKind::parse, where + ": unknown stage '" + std::string(f[1]) + "'");
    e.stage = *stage;
    auto opt_u = [&](std::string_view s) -> std::optional<std::uint64_t> {
      if (s == "-") return std::nullopt;
      auto v = parse_u64(s);
      if (!v) fail(ErrorKind::parse, where + ": bad integer '" + std::string(s) + "'");
      return v;
    };
    auto opt_d = [&](std::string_view s) -> std::optional<double> {
      if (s == "-") return std::nullopt;
      auto v = parse_double(s);
      if (!v) fail(ErrorKind::parse, where + ": bad real '" + std::string(s) + "'");
      return v;
    };
    if (auto c = opt_u(f[2])) e.cluster = static_cast<std::uint32_t>(*c);
    e.rank_in_cluster = opt_u(f[3]);
    e.similarity = opt_d(f[4]);
    e.entropy_bits = opt_d(f[5]);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace rsprune
