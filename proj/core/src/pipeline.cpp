#include "rsprune/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <unordered_map>

#include "rsprune/baselines.hpp"
#include "rsprune/errors.hpp"
#include "rsprune/rng.hpp"
#include "rsprune/text_io.hpp"

namespace rsprune {

StageMarker::StageMarker(fs::path out_dir, std::string stage)
    : path_(std::move(out_dir) / (".stage-" + stage + ".done")) {}

bool StageMarker::matches(const std::string& fingerprint, const std::vector<fs::path>& produced) const {
  if (!fs::is_regular_file(path_)) return false;
  for (const auto& p : produced) {
    if (!fs::is_regular_file(p)) return false;
  }
  try {
    for (const auto& [k, v] : read_key_values(path_)) {
      if (k == "inputs") return v == fingerprint;
    }
  } catch (const Error&) {
  }
  return false;
}

void StageMarker::write(const std::string& fingerprint) const { write_key_values(path_, {{"inputs", fingerprint}}); }

void StageMarker::clear() const {
  std::error_code ec;
  fs::remove(path_, ec);
}

std::string fingerprint_files(const std::string& label, const std::vector<fs::path>& files) {
  std::string material = label;
  for (const auto& f : files) {
    material += "\nfile " + sha256_file_hex(f);
    const auto sidecar = ids_sidecar_path(f);
    if (fs::is_regular_file(sidecar)) material += " ids " + sha256_file_hex(sidecar);
  }
  return sha256_hex(material);
}

namespace {

fs::path out_file(const PipelineConfig& c, const char* name) { return c.paths.out_dir / name; }

std::string entropy_label(const EntropyConfig& e) {
  std::string s = "entropy mode=" + std::string(to_string(e.mode));
  s += e.mode == EntropyMode::threshold ? " tau=" + format_exact(e.tau) : " keep=" + format_exact(e.keep_fraction);
  s += " levels=" + std::to_string(e.levels) + " gray=" + std::string(to_string(e.grayscale));
  return s;
}

// Images are fingerprinted by size and modification time rather than content.
std::string image_stamps(const DatasetManifest& manifest, const fs::path& base) {
  std::string s;
  for (const auto& r : manifest.records()) {
    fs::path p(r.uri);
    if (p.is_relative()) p = base / p;
    std::error_code ec;
    const auto size = fs::file_size(p, ec);
    const auto mtime = fs::last_write_time(p, ec);
    s += r.uri;
    s += ec ? " missing" : " " + std::to_string(size) + " " +
                               std::to_string(mtime.time_since_epoch().count());
    s += '\n';
  }
  return sha256_hex(s);
}

void ensure_out_dir(const PipelineConfig& c) {
  std::error_code ec;
  fs::create_directories(c.paths.out_dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create output directory " + c.paths.out_dir.string() + ": " + ec.message());
}

}  // namespace

EntropyStageResult run_entropy_stage(const PipelineConfig& config, const RasterSource& source) {
  if (config.paths.manifest.empty()) fail(ErrorKind::config, "paths.manifest is required");
  config.entropy.validate();
  ensure_out_dir(config);
  const auto manifest = load_manifest(config.paths.manifest);
  const auto base = fs::absolute(config.paths.manifest).parent_path();

  EntropyStageResult out;
  out.n_original = manifest.size();
  const auto kept_path = out_file(config, outputs::kKeptManifest);
  const auto scores_path = out_file(config, outputs::kScores);
  const auto rejects_path = out_file(config, outputs::kRejects);

  std::vector<fs::path> inputs{config.paths.manifest};
  std::string label = entropy_label(config.entropy);
  if (config.paths.scores.empty()) {
    label += "\nimages " + image_stamps(manifest, base);
  } else {
    inputs.push_back(config.paths.scores);
  }
  const auto fingerprint = fingerprint_files(label, inputs);
  StageMarker marker(config.paths.out_dir, "entropy");
  if (marker.matches(fingerprint, {kept_path, scores_path, rejects_path})) {
    out.kept = load_manifest(kept_path);
    out.scores = read_scores(scores_path);
    out.skipped = true;
    return out;
  }
  marker.clear();

  EntropyFilterResult result;
  if (!config.paths.scores.empty()) {
    result = entropy_filter_scored(manifest, read_scores(config.paths.scores), config.entropy);
  } else {
    RasterSource resolved = [&](const SampleRecord& r) {
      fs::path p(r.uri);
      if (p.is_relative()) {
        SampleRecord copy = r;
        copy.uri = (base / p).string();
        return source(copy);
      }
      return source(r);
    };
    result = entropy_filter(manifest, config.entropy, resolved, config.workers);
  }
  write_manifest(result.kept, kept_path);
  write_scores(result.scores, scores_path);
  write_rejects(result.rejects, rejects_path);
  marker.write(fingerprint);

  out.kept = std::move(result.kept);
  out.scores = std::move(result.scores);
  return out;
}

EmbeddingMatrix load_reference(const std::vector<fs::path>& paths) {
  if (paths.empty()) fail(ErrorKind::config, "paths.reference is required");
  if (paths.size() == 1) return read_embeddings(paths.front());
  std::vector<std::string> ids;
  std::vector<float> data;
  std::uint32_t dim = 0;
  for (const auto& p : paths) {
    auto m = read_embeddings(p);
    if (dim == 0) dim = m.dim();
    if (m.dim() != dim) {
      fail(ErrorKind::alignment, "reference file " + p.string() + " has dim " + std::to_string(m.dim()) +
                                     ", expected " + std::to_string(dim));
    }
    ids.insert(ids.end(), m.ids().begin(), m.ids().end());
    data.insert(data.end(), m.data().begin(), m.data().end());
  }
  return EmbeddingMatrix(std::move(ids), dim, std::move(data));
}

CentroidSet run_cluster_stage(const PipelineConfig& config, bool* skipped) {
  ensure_out_dir(config);
  const auto path = out_file(config, outputs::kCentroids);
  const auto& c = config.cluster;
  const std::string label = "cluster k=" + std::to_string(c.k) + " iters=" + std::to_string(c.max_iters) +
                            " tol=" + format_exact(c.tol) + " init=" + std::string(to_string(c.init)) +
                            " seed=" + std::to_string(c.seed);
  if (config.paths.reference.empty()) fail(ErrorKind::config, "paths.reference is required");
  const auto fingerprint = fingerprint_files(label, config.paths.reference);
  StageMarker marker(config.paths.out_dir, "cluster");
  if (marker.matches(fingerprint, {path, ids_sidecar_path(path)})) {
    if (skipped) *skipped = true;
    return load_centroids(path);
  }
  marker.clear();
  const auto reference = load_reference(config.paths.reference);
  auto centroids = spherical_kmeans(reference.view(), c, config.workers);
  save_centroids(centroids, path);
  marker.write(fingerprint);
  if (skipped) *skipped = false;
  return centroids;
}

EmbeddingMatrix join_embeddings(const fs::path& embeddings, const DatasetManifest& manifest) {
  EmbeddingReader reader(embeddings);
  const auto index = build_id_index(reader.ids());
  std::vector<std::size_t> rows;
  rows.reserve(manifest.size());
  std::vector<std::string> missing;
  std::size_t missing_count = 0;
  for (const auto& r : manifest.records()) {
    auto it = index.find(r.id);
    if (it == index.end()) {
      if (missing.size() < 100) missing.push_back(r.id);
      ++missing_count;
      continue;
    }
    rows.push_back(it->second);
  }
  if (missing_count > 0) {
    std::string msg = std::to_string(missing_count) + " surviving id(s) have no embedding in " +
                      embeddings.string() + ":";
    for (const auto& id : missing) msg += " " + id;
    if (missing_count > missing.size()) msg += " ...";
    fail(ErrorKind::join, msg);
  }
  return reader.read_selected(rows);
}

AssignmentTable run_assign_stage(const PipelineConfig& config, const EmbeddingMatrix& rows,
                                 const CentroidSet& centroids, const std::vector<fs::path>& fingerprint_inputs,
                                 bool* skipped) {
  ensure_out_dir(config);
  const auto text_path = out_file(config, outputs::kAssignments);
  const auto cache_path = out_file(config, outputs::kAssignmentCache);
  std::string ids_digest;
  for (const auto& id : rows.ids()) {
    ids_digest += id;
    ids_digest += '\n';
  }
  std::string centroid_bytes(reinterpret_cast<const char*>(centroids.data().data()),
                             centroids.data().size() * sizeof(float));
  const std::string label = "assign rows=" + sha256_hex(ids_digest) + " centroids=" + sha256_hex(centroid_bytes) +
                            " dim=" + std::to_string(centroids.dim());
  const auto fingerprint = fingerprint_files(label, fingerprint_inputs);
  StageMarker marker(config.paths.out_dir, "assign");
  if (marker.matches(fingerprint, {text_path, cache_path})) {
    auto table = read_assignment_cache(cache_path);
    if (table.ids == rows.ids() && table.k == centroids.k()) {
      if (skipped) *skipped = true;
      return table;
    }
  }
  marker.clear();
  auto table = assign_nearest(rows, centroids, config.workers);
  write_assignments(table, text_path);
  write_assignment_cache(table, cache_path);
  marker.write(fingerprint);
  if (skipped) *skipped = false;
  return table;
}

std::uint64_t resolve_budget(const PipelineConfig& config, std::uint64_t n_after_stage1, std::uint64_t n_original) {
  if (config.budget) {
    if (*config.budget > n_after_stage1) {
      fail(ErrorKind::infeasible, "budget " + std::to_string(*config.budget) + " exceeds the " +
                                      std::to_string(n_after_stage1) +
                                      " stage-I survivors; raise entropy.keep_fraction or lower sampling.budget");
    }
    return *config.budget;
  }
  if (!config.pruning_ratio) fail(ErrorKind::config, "one of sampling.pruning_ratio or sampling.budget is required");
  return compute_budget(n_after_stage1, *config.pruning_ratio, n_original);
}

PipelineRun run_pipeline(const PipelineConfig& config, const RasterSource& source) {
  require_pipeline_inputs(config);
  const bool primary = config.strategy == kStrategyPrimary;
  std::optional<BaselineStrategy> baseline;
  if (!primary) baseline = parse_baseline(config.strategy);

  PipelineRun run;
  auto stage1 = run_entropy_stage(config, source);
  if (stage1.skipped) run.skipped_stages.push_back("entropy");
  run.n_original = stage1.n_original;
  run.n_after_stage1 = stage1.kept.size();
  run.budget = resolve_budget(config, run.n_after_stage1, run.n_original);

  const bool needs_prior = primary || baseline == BaselineStrategy::moderate_ds;
  if (baseline == BaselineStrategy::random) {
    run.selection = random_select(stage1.kept, run.budget, derive_seed(config.seed, "baseline.random"));
  } else {
    const auto rows = join_embeddings(config.paths.embeddings, stage1.kept);
    if (needs_prior) {
      bool skipped = false;
      const auto centroids = run_cluster_stage(config, &skipped);
      if (skipped) run.skipped_stages.push_back("cluster");
      const auto table = run_assign_stage(config, rows, centroids, {config.paths.embeddings}, &skipped);
      if (skipped) run.skipped_stages.push_back("assign");
      if (primary) {
        run.selection = stratified_select(pool_by_cluster(table, config.workers), SamplingConfig{run.budget});
      } else {
        run.selection = moderate_ds_select(rows, table, run.budget);
      }
    } else {
      ClusterConfig own = config.cluster;
      own.seed = derive_seed(config.seed, "baseline.cluster_nearest");
      run.selection = cluster_nearest_select(rows, own, run.budget, config.workers);
    }
  }

  std::unordered_map<std::string_view, double> bits;
  for (const auto& s : stage1.scores) bits.emplace(s.id, s.bits);
  for (auto& e : run.selection.entries) {
    if (auto it = bits.find(e.id); it != bits.end()) e.entropy_bits = it->second;
  }

  write_selection(run.selection.entries, out_file(config, outputs::kSelection));
  KeyValues extra = {
      {"strategy", config.strategy},
      {"n_original", std::to_string(run.n_original)},
      {"n_after_stage1", std::to_string(run.n_after_stage1)},
      {"budget", std::to_string(run.budget)},
  };
  write_selection_stats(run.selection, out_file(config, outputs::kSelectionStats), extra);

  std::string meta = "# rsprune run metadata; replay with: rsprune pipeline --config <this file>\n";
  meta += render_config(config);
  meta += "# seed.cluster = " + std::to_string(config.cluster.seed) + "\n";
  meta += "# seed.baseline.random = " + std::to_string(derive_seed(config.seed, "baseline.random")) + "\n";
  meta += "# seed.baseline.cluster_nearest = " +
          std::to_string(derive_seed(config.seed, "baseline.cluster_nearest")) + "\n";
  meta += "# n_original = " + std::to_string(run.n_original) + "\n";
  meta += "# n_after_stage1 = " + std::to_string(run.n_after_stage1) + "\n";
  meta += "# budget = " + std::to_string(run.budget) + "\n";
  meta += "# selected = " + std::to_string(run.selection.entries.size()) + "\n";
  write_text_atomic(out_file(config, outputs::kRunMeta), meta);
  return run;
}

}  // namespace rsprune
