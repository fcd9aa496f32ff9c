#include "rsprune/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "rsprune/baselines.hpp"
#include "rsprune/errors.hpp"
#include "rsprune/rng.hpp"
#include "rsprune/text_io.hpp"

namespace rsprune {

ConfigEntries ConfigEntries::parse(std::string_view text, const fs::path& base_dir, const std::string& origin) {
  ConfigEntries out;
  std::size_t lineno = 0;
  for (auto raw : split(text, '\n')) {
    ++lineno;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto where = origin + ":" + std::to_string(lineno);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(ErrorKind::config, where + ": expected 'section.key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty() || key.find('.') == std::string::npos) {
      fail(ErrorKind::config, where + ": key must look like 'section.key'");
    }
    if (out.contains(key)) fail(ErrorKind::config, where + ": key '" + key + "' given twice");
    out.entries_[key] = {value, base_dir, where};
  }
  return out;
}

ConfigEntries ConfigEntries::load(const fs::path& path) {
  if (!fs::is_regular_file(path)) fail(ErrorKind::config, "config file not found: " + path.string());
  const auto abs = fs::absolute(path);
  return parse(read_text(abs), abs.parent_path(), path.string());
}

void ConfigEntries::set(const std::string& key, std::string value, fs::path base_dir) {
  entries_[key] = {std::move(value), std::move(base_dir), "override"};
}

void ConfigEntries::merge(const ConfigEntries& other) {
  for (const auto& [k, e] : other.entries_) entries_[k] = e;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "paths.manifest",   "paths.embeddings",      "paths.reference",     "paths.scores",
      "paths.out_dir",    "entropy.mode",          "entropy.keep_fraction", "entropy.tau",
      "entropy.levels",   "entropy.grayscale",     "cluster.k",           "cluster.max_iters",
      "cluster.tol",      "cluster.init",          "sampling.pruning_ratio", "sampling.budget",
      "run.strategy",     "run.seed",              "run.workers",
  };
  return keys;
}

namespace {

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string suggestion_for(const std::string& key) {
  std::string best;
  std::size_t best_d = 3;
  for (const auto& k : config_keys()) {
    const auto d = edit_distance(key, k);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best.empty() ? "" : " (did you mean '" + best + "'?)";
}

class Resolver {
 public:
  Resolver(const ConfigEntries& entries, bool check_paths) : entries_(entries), check_paths_(check_paths) {}

  const ConfigEntries::Entry* get(const std::string& key) const {
    auto it = entries_.entries().find(key);
    return it == entries_.entries().end() ? nullptr : &it->second;
  }

  void error(const std::string& msg) { errors_.push_back(msg); }

  std::string text(const std::string& key, const std::string& fallback, PipelineConfig& cfg) {
    if (const auto* e = get(key)) return e->value;
    cfg.defaults_applied.push_back(key + " = " + fallback);
    return fallback;
  }

  template <class T, class Parse>
  T value(const std::string& key, T fallback, const std::string& fallback_text, PipelineConfig& cfg, Parse parse) {
    const auto* e = get(key);
    if (!e) {
      cfg.defaults_applied.push_back(key + " = " + fallback_text);
      return fallback;
    }
    auto v = parse(e->value);
    if (!v) {
      error(key + ": cannot parse '" + e->value + "' (" + e->origin + ")");
      return fallback;
    }
    return static_cast<T>(*v);
  }

  std::optional<double> real(const std::string& key) {
    const auto* e = get(key);
    if (!e) return std::nullopt;
    auto v = parse_double(e->value);
    if (!v) error(key + ": not a number '" + e->value + "' (" + e->origin + ")");
    return v;
  }

  std::optional<std::uint64_t> integer(const std::string& key) {
    const auto* e = get(key);
    if (!e) return std::nullopt;
    auto v = parse_u64(e->value);
    if (!v) error(key + ": not a non-negative integer '" + e->value + "' (" + e->origin + ")");
    return v;
  }

  fs::path path(const std::string& key, const std::string& value, const fs::path& base, bool must_exist) {
    fs::path p(value);
    if (p.is_relative()) p = base / p;
    p = p.lexically_normal();
    if (must_exist && check_paths_ && !fs::exists(p)) error(key + ": path does not exist: " + p.string());
    return p;
  }

  template <class Fn>
  void guarded(Fn&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      error(e.what());
    }
  }

  const std::vector<std::string>& errors() const { return errors_; }

 private:
  const ConfigEntries& entries_;
  bool check_paths_;
  std::vector<std::string> errors_;
};

}  // namespace

PipelineConfig resolve_config(const ConfigEntries& entries, bool check_paths, bool require_sampling) {
  PipelineConfig cfg;
  Resolver r(entries, check_paths);
  const auto& known = config_keys();
  for (const auto& [key, e] : entries.entries()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      r.error("unknown key '" + key + "' (" + e.origin + ")" + suggestion_for(key));
    }
  }

  if (const auto* e = r.get("paths.manifest")) cfg.paths.manifest = r.path("paths.manifest", e->value, e->base_dir, true);
  if (const auto* e = r.get("paths.embeddings")) {
    cfg.paths.embeddings = r.path("paths.embeddings", e->value, e->base_dir, true);
  }
  if (const auto* e = r.get("paths.reference")) {
    for (auto part : split(e->value, ',')) {
      part = trim(part);
      if (part.empty()) continue;
      cfg.paths.reference.push_back(r.path("paths.reference", std::string(part), e->base_dir, true));
    }
    if (cfg.paths.reference.empty()) r.error("paths.reference: no file given");
  }
  if (const auto* e = r.get("paths.scores")) cfg.paths.scores = r.path("paths.scores", e->value, e->base_dir, true);
  if (const auto* e = r.get("paths.out_dir")) {
    cfg.paths.out_dir = r.path("paths.out_dir", e->value, e->base_dir, false);
  } else {
    cfg.paths.out_dir = (fs::current_path() / "rsprune_out").lexically_normal();
    cfg.defaults_applied.push_back("paths.out_dir = " + cfg.paths.out_dir.string());
  }

  r.guarded([&] { cfg.entropy.mode = parse_entropy_mode(r.text("entropy.mode", "top_fraction", cfg)); });
  if (cfg.entropy.mode == EntropyMode::top_fraction) {
    if (r.get("entropy.tau")) r.error("entropy.tau applies only when entropy.mode = threshold");
    cfg.entropy.keep_fraction =
        r.value<double>("entropy.keep_fraction", 1.0, "1", cfg, [](auto s) { return parse_double(s); });
  } else {
    if (r.get("entropy.keep_fraction")) r.error("entropy.keep_fraction applies only when entropy.mode = top_fraction");
    if (auto tau = r.real("entropy.tau")) {
      cfg.entropy.tau = *tau;
    } else if (!r.get("entropy.tau")) {
      r.error("entropy.tau is required when entropy.mode = threshold");
    }
  }
  cfg.entropy.levels = r.value<std::uint32_t>("entropy.levels", 256, "256", cfg, [](auto s) { return parse_u64(s); });
  r.guarded([&] { cfg.entropy.grayscale = parse_grayscale_policy(r.text("entropy.grayscale", "auto", cfg)); });
  r.guarded([&] { cfg.entropy.validate(); });

  cfg.cluster.k = r.value<std::uint32_t>("cluster.k", 200, "200", cfg, [](auto s) { return parse_u64(s); });
  cfg.cluster.max_iters =
      r.value<std::uint32_t>("cluster.max_iters", 100, "100", cfg, [](auto s) { return parse_u64(s); });
  cfg.cluster.tol = r.value<double>("cluster.tol", 1e-4, "0.0001", cfg, [](auto s) { return parse_double(s); });
  r.guarded([&] { cfg.cluster.init = parse_init_method(r.text("cluster.init", "kmeans_pp", cfg)); });
  if (cfg.cluster.k < 1) r.error("cluster.k must be >= 1");
  if (!(cfg.cluster.tol >= 0.0) || !std::isfinite(cfg.cluster.tol)) r.error("cluster.tol must be >= 0");

  cfg.pruning_ratio = r.real("sampling.pruning_ratio");
  cfg.budget = r.integer("sampling.budget");
  const bool has_ratio = r.get("sampling.pruning_ratio") != nullptr;
  const bool has_budget = r.get("sampling.budget") != nullptr;
  if (has_ratio && has_budget) {
    r.error("exactly one of sampling.pruning_ratio and sampling.budget must be given, not both");
  } else if (require_sampling && !has_ratio && !has_budget) {
    r.error("exactly one of sampling.pruning_ratio and sampling.budget must be given");
  }
  if (cfg.pruning_ratio && !(*cfg.pruning_ratio > 0.0 && *cfg.pruning_ratio < 1.0)) {
    r.error("sampling.pruning_ratio must be in (0, 1)");
  }
  if (cfg.budget && *cfg.budget < 1) r.error("sampling.budget must be >= 1");

  cfg.strategy = r.text("run.strategy", std::string(kStrategyPrimary), cfg);
  if (cfg.strategy != kStrategyPrimary) r.guarded([&] { parse_baseline(cfg.strategy); });
  cfg.seed = r.value<std::uint64_t>("run.seed", 0, "0", cfg, [](auto s) { return parse_u64(s); });
  cfg.workers = r.value<unsigned>("run.workers", 1, "1", cfg, [](auto s) { return parse_u64(s); });
  if (cfg.workers < 1) r.error("run.workers must be >= 1");
  cfg.cluster.seed = derive_seed(cfg.seed, "cluster");

  if (!r.errors().empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : r.errors()) msg += "\n  - " + e;
    fail(ErrorKind::config, msg);
  }
  return cfg;
}

void require_pipeline_inputs(const PipelineConfig& config) {
  std::vector<std::string> missing;
  if (config.paths.manifest.empty()) missing.push_back("paths.manifest");
  const bool needs_embeddings = config.strategy != "random";
  const bool needs_reference = config.strategy == kStrategyPrimary || config.strategy == "moderate_ds";
  if (needs_embeddings && config.paths.embeddings.empty()) missing.push_back("paths.embeddings");
  if (needs_reference && config.paths.reference.empty()) missing.push_back("paths.reference");
  if (missing.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& m : missing) msg += "\n  - " + m + " is required for run.strategy = " + config.strategy;
  fail(ErrorKind::config, msg);
}

PipelineConfig validate_config(const fs::path& path, const ConfigEntries& overrides) {
  auto entries = ConfigEntries::load(path);
  entries.merge(overrides);
  auto cfg = resolve_config(entries, true);
  require_pipeline_inputs(cfg);
  return cfg;
}

namespace {

std::string join_paths(const std::vector<fs::path>& paths) {
  std::string out;
  for (const auto& p : paths) {
    if (!out.empty()) out += ",";
    out += p.string();
  }
  return out;
}

void line(std::string& out, std::string_view key, const std::string& value) {
  out += key;
  out += " = ";
  out += value;
  out += '\n';
}

}  // namespace

std::string render_config(const PipelineConfig& c) {
  std::string out;
  auto abs = [](const fs::path& p) { return p.empty() ? std::string() : fs::absolute(p).lexically_normal().string(); };
  std::vector<fs::path> refs;
  for (const auto& p : c.paths.reference) refs.push_back(abs(p));
  if (!c.paths.manifest.empty()) line(out, "paths.manifest", abs(c.paths.manifest));
  if (!c.paths.embeddings.empty()) line(out, "paths.embeddings", abs(c.paths.embeddings));
  if (!refs.empty()) line(out, "paths.reference", join_paths(refs));
  if (!c.paths.scores.empty()) line(out, "paths.scores", abs(c.paths.scores));
  line(out, "paths.out_dir", abs(c.paths.out_dir));
  line(out, "entropy.mode", std::string(to_string(c.entropy.mode)));
  if (c.entropy.mode == EntropyMode::top_fraction) {
    line(out, "entropy.keep_fraction", format_exact(c.entropy.keep_fraction));
  } else {
    line(out, "entropy.tau", format_exact(c.entropy.tau));
  }
  line(out, "entropy.levels", std::to_string(c.entropy.levels));
  line(out, "entropy.grayscale", std::string(to_string(c.entropy.grayscale)));
  line(out, "cluster.k", std::to_string(c.cluster.k));
  line(out, "cluster.max_iters", std::to_string(c.cluster.max_iters));
  line(out, "cluster.tol", format_exact(c.cluster.tol));
  line(out, "cluster.init", std::string(to_string(c.cluster.init)));
  if (c.pruning_ratio) line(out, "sampling.pruning_ratio", format_exact(*c.pruning_ratio));
  if (c.budget) line(out, "sampling.budget", std::to_string(*c.budget));
  line(out, "run.strategy", c.strategy);
  line(out, "run.seed", std::to_string(c.seed));
  line(out, "run.workers", std::to_string(c.workers));
  return out;
}

std::string validation_report(const PipelineConfig& c) {
  std::string out = "configuration OK\n\n" + render_config(c);
  out += "\n# derived seeds\n";
  out += "# cluster = " + std::to_string(c.cluster.seed) + "\n";
  out += "# baseline.random = " + std::to_string(derive_seed(c.seed, "baseline.random")) + "\n";
  out += "# baseline.cluster_nearest = " + std::to_string(derive_seed(c.seed, "baseline.cluster_nearest")) + "\n";
  out += "\n# defaults applied (" + std::to_string(c.defaults_applied.size()) + ")\n";
  for (const auto& d : c.defaults_applied) out += "default: " + d + "\n";
  return out;
}

}  // namespace rsprune
