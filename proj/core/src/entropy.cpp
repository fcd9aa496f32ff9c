#include "rsprune/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "rsprune/errors.hpp"
#include "rsprune/parallel.hpp"
#include "rsprune/text_io.hpp"

namespace rsprune {

void EntropyConfig::validate() const {
  if (levels < 2) fail(ErrorKind::config, "entropy.levels must be >= 2");
  if (levels > 65536) fail(ErrorKind::config, "entropy.levels must be <= 65536");
  switch (mode) {
    case EntropyMode::threshold:
      if (!(tau >= 0.0) || !std::isfinite(tau)) fail(ErrorKind::config, "entropy.tau must be >= 0");
      break;
    case EntropyMode::top_fraction:
      if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
        fail(ErrorKind::config, "entropy.keep_fraction must be in (0, 1]");
      }
      break;
  }
}

std::string_view to_string(EntropyMode mode) noexcept {
  return mode == EntropyMode::threshold ? "threshold" : "top_fraction";
}

std::string_view to_string(GrayscalePolicy policy) noexcept {
  switch (policy) {
    case GrayscalePolicy::automatic: return "auto";
    case GrayscalePolicy::luma_601: return "luma_601";
    case GrayscalePolicy::band_mean: return "band_mean";
  }
  return "?";
}

EntropyMode parse_entropy_mode(std::string_view text) {
  if (text == "threshold") return EntropyMode::threshold;
  if (text == "top_fraction") return EntropyMode::top_fraction;
  fail(ErrorKind::config, "unknown entropy mode '" + std::string(text) + "'");
}

GrayscalePolicy parse_grayscale_policy(std::string_view text) {
  if (text == "auto") return GrayscalePolicy::automatic;
  if (text == "luma_601") return GrayscalePolicy::luma_601;
  if (text == "band_mean") return GrayscalePolicy::band_mean;
  fail(ErrorKind::config, "unknown grayscale policy '" + std::string(text) + "'");
}

Histogram grayscale_histogram(const Raster& image, const EntropyConfig& config) {
  if (image.pixel_count() == 0 || image.bands == 0) {
    fail(ErrorKind::degenerate, "raster has no pixels");
  }
  if (image.samples.size() != image.pixel_count() * image.bands) {
    fail(ErrorKind::precondition, "raster sample count does not match width*height*bands");
  }
  if (config.levels < 2) fail(ErrorKind::config, "entropy.levels must be >= 2");

  const bool luma = image.bands >= 3 &&
                    (config.grayscale == GrayscalePolicy::luma_601 ||
                     (config.grayscale == GrayscalePolicy::automatic && image.bands == 3));
  const std::uint64_t full_scale = std::uint64_t{image.max_value} + 1;
  const std::uint64_t levels = config.levels;

  Histogram h;
  h.counts.assign(levels, 0);
  const std::size_t n = image.pixel_count();
  const std::uint32_t bands = image.bands;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint16_t* px = image.samples.data() + i * bands;
    // Integer arithmetic, rounding half up, so ties resolve identically everywhere.
    std::uint64_t value = 0;
    if (luma) {
      value = (299u * std::uint64_t{px[0]} + 587u * std::uint64_t{px[1]} + 114u * std::uint64_t{px[2]} + 500u) / 1000u;
    } else if (bands == 1) {
      value = px[0];
    } else {
      std::uint64_t sum = 0;
      for (std::uint32_t b = 0; b < bands; ++b) sum += px[b];
      value = (2 * sum + bands) / (2 * std::uint64_t{bands});
    }
    value = std::min<std::uint64_t>(value, image.max_value);
    ++h.counts[value * levels / full_scale];
  }
  h.total = n;
  return h;
}

double shannon_entropy(const Histogram& h) {
  if (h.total == 0) fail(ErrorKind::degenerate, "entropy of an empty histogram");
  const double total = static_cast<double>(h.total);
  double sum = 0.0;
  for (std::uint64_t c : h.counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    sum -= p * std::log2(p);
  }
  // Single-level histograms give exactly 0; guard the -0.0 from rounding.
  return sum <= 0.0 ? 0.0 : sum;
}

std::uint64_t count_for_fraction(double fraction, std::uint64_t n) {
  const long double x = static_cast<long double>(fraction) * static_cast<long double>(n);
  const long double r = std::round(x);
  if (std::fabs(x - r) <= 1e-9L * std::max<long double>(1.0L, x)) return static_cast<std::uint64_t>(r);
  return static_cast<std::uint64_t>(std::ceil(x));
}

std::vector<bool> select_by_entropy(std::span<const EntropyScore> scores, const EntropyConfig& config) {
  config.validate();
  std::vector<bool> keep(scores.size(), false);
  if (config.mode == EntropyMode::threshold) {
    for (std::size_t i = 0; i < scores.size(); ++i) keep[i] = scores[i].bits >= config.tau;
    return keep;
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a].bits != scores[b].bits) return scores[a].bits > scores[b].bits;
    return scores[a].id < scores[b].id;
  });
  const auto n_keep = std::min<std::uint64_t>(count_for_fraction(config.keep_fraction, scores.size()),
                                              scores.size());
  for (std::uint64_t i = 0; i < n_keep; ++i) keep[order[i]] = true;
  return keep;
}

std::unordered_map<std::string, double> EntropyFilterResult::score_map() const {
  std::unordered_map<std::string, double> m;
  m.reserve(scores.size());
  for (const auto& s : scores) m.emplace(s.id, s.bits);
  return m;
}

Raster decode_record_raster(const SampleRecord& record) { return decode_raster(record.uri); }

namespace {

EntropyFilterResult apply_rule(const DatasetManifest& manifest, std::vector<EntropyScore> scores,
                               std::vector<EntropyReject> rejects, const EntropyConfig& config) {
  const auto keep = select_by_entropy(scores, config);
  std::unordered_map<std::string_view, bool> kept_ids;
  kept_ids.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (keep[i]) kept_ids.emplace(scores[i].id, true);
  }
  EntropyFilterResult out;
  out.kept = manifest.filter([&](const SampleRecord& r) { return kept_ids.contains(r.id); });
  out.scores = std::move(scores);
  out.rejects = std::move(rejects);
  return out;
}

}  // namespace

EntropyFilterResult entropy_filter(const DatasetManifest& manifest, const EntropyConfig& config,
                                   const RasterSource& source, unsigned workers) {
  config.validate();
  const auto& records = manifest.records();
  std::vector<double> bits(records.size(), 0.0);
  std::vector<std::string> errors(records.size());
  std::vector<char> ok(records.size(), 0);

  parallel_for_ranges(records.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        bits[i] = shannon_entropy(grayscale_histogram(source(records[i]), config));
        ok[i] = 1;
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  });

  std::vector<EntropyScore> scores;
  std::vector<EntropyReject> rejects;
  scores.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (ok[i]) {
      scores.push_back({records[i].id, bits[i]});
    } else {
      std::string reason = errors[i];
      std::replace_if(reason.begin(), reason.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
      rejects.push_back({records[i].id, std::move(reason)});
    }
  }
  return apply_rule(manifest, std::move(scores), std::move(rejects), config);
}

EntropyFilterResult entropy_filter_scored(const DatasetManifest& manifest,
                                          std::span<const EntropyScore> scores,
                                          const EntropyConfig& config) {
  config.validate();
  std::unordered_map<std::string_view, double> by_id;
  by_id.reserve(scores.size());
  for (const auto& s : scores) by_id.emplace(s.id, s.bits);

  std::vector<EntropyScore> ordered;
  std::vector<EntropyReject> rejects;
  for (const auto& r : manifest.records()) {
    auto it = by_id.find(r.id);
    if (it == by_id.end()) {
      rejects.push_back({r.id, "no score"});
    } else {
      ordered.push_back({r.id, it->second});
    }
  }
  return apply_rule(manifest, std::move(ordered), std::move(rejects), config);
}

void write_scores(std::span<const EntropyScore> scores, const std::filesystem::path& path) {
  AtomicFileWriter w(path);
  for (const auto& s : scores) w.stream() << s.id << '\t' << format_fixed(s.bits, 6) << '\n';
  w.commit();
}

std::vector<EntropyScore> read_scores(const std::filesystem::path& path) {
  std::vector<EntropyScore> out;
  for (const auto& [id, value] : read_key_values(path)) {
    auto v = parse_double(value);
    if (!v || *v < 0.0) fail(ErrorKind::parse, path.string() + ": bad entropy for '" + id + "'");
    out.push_back({id, *v});
  }
  return out;
}

void write_rejects(std::span<const EntropyReject> rejects, const std::filesystem::path& path) {
  AtomicFileWriter w(path);
  for (const auto& r : rejects) w.stream() << r.id << '\t' << r.reason << '\n';
  w.commit();
}

}  // namespace rsprune
