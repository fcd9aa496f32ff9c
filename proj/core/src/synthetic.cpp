#include "rsprune/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "rsprune/baselines.hpp"
#include "rsprune/errors.hpp"
#include "rsprune/rng.hpp"

namespace rsprune {

void SyntheticSpec::validate() const {
  if (n == 0 || dim == 0 || k_true == 0) fail(ErrorKind::config, "synthetic n, dim and k_true must be positive");
  if (!(imbalance >= 0.0)) fail(ErrorKind::config, "synthetic imbalance must be >= 0");
  if (!(noise_fraction >= 0.0 && noise_fraction < 1.0)) {
    fail(ErrorKind::config, "synthetic noise_fraction must be in [0, 1)");
  }
  if (!(spread >= 0.0)) fail(ErrorKind::config, "synthetic spread must be >= 0");
  const auto noise = static_cast<std::size_t>(std::llround(noise_fraction * static_cast<double>(n)));
  if (k_true > n - noise) {
    fail(ErrorKind::config, "k_true = " + std::to_string(k_true) + " exceeds the non-noise rows");
  }
}

namespace {

std::string make_id(const std::string& prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%08zu", i);
  return prefix + buf;
}

void random_unit(Rng& rng, float* out, std::uint32_t dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  } while (norm < 1e-20);
  norm = std::sqrt(norm);
  for (std::uint32_t j = 0; j < dim; ++j) out[j] = static_cast<float>(v[j] / norm);
}

void perturbed(Rng& rng, const float* mean, double spread, float* out, std::uint32_t dim) {
  const double sigma = spread / std::sqrt(static_cast<double>(dim));
  std::vector<double> v(dim);
  double norm = 0.0;
  for (std::uint32_t j = 0; j < dim; ++j) {
    v[j] = mean[j] + sigma * rng.normal();
    norm += v[j] * v[j];
  }
  norm = std::sqrt(norm);
  for (std::uint32_t j = 0; j < dim; ++j) out[j] = static_cast<float>(v[j] / norm);
}

}  // namespace

std::vector<std::uint64_t> zipf_sizes(std::uint64_t n, std::uint32_t k, double exponent) {
  if (k == 0 || n < k) fail(ErrorKind::config, "zipf_sizes needs n >= k >= 1");
  // Apportion on a 1e9 weight scale; proportional_allocation is exact integer.
  std::vector<std::uint64_t> weights(k);
  for (std::uint32_t i = 0; i < k; ++i) {
    weights[i] = static_cast<std::uint64_t>(std::llround(1e9 / std::pow(static_cast<double>(i + 1), exponent)));
    if (weights[i] == 0) weights[i] = 1;
  }
  auto sizes = proportional_allocation(weights, n - k);
  for (auto& s : sizes) s += 1;
  return sizes;
}

SyntheticCorpus sample_components(std::span<const float> means, std::uint32_t dim,
                                  std::span<const std::uint64_t> sizes, double spread, std::uint64_t seed,
                                  const std::string& id_prefix) {
  std::size_t n = 0;
  for (auto s : sizes) n += s;
  Rng rng(seed);
  std::vector<std::int32_t> labels;
  labels.reserve(n);
  for (std::size_t c = 0; c < sizes.size(); ++c) labels.insert(labels.end(), sizes[c], static_cast<std::int32_t>(c));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    std::swap(labels[i], labels[i + static_cast<std::size_t>(rng.below(n - i))]);
  }
  std::vector<float> data(n * dim);
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    perturbed(rng, means.data() + static_cast<std::size_t>(labels[i]) * dim, spread, data.data() + i * dim, dim);
    ids[i] = make_id(id_prefix, i);
  }
  SyntheticCorpus out;
  out.matrix = EmbeddingMatrix(std::move(ids), dim, std::move(data));
  out.labels = std::move(labels);
  out.means.assign(means.begin(), means.end());
  out.component_sizes.assign(sizes.begin(), sizes.end());
  return out;
}

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::uint32_t dim = spec.dim;
  const auto noise = static_cast<std::size_t>(std::llround(spec.noise_fraction * static_cast<double>(spec.n)));
  const auto sizes = zipf_sizes(spec.n - noise, spec.k_true, spec.imbalance);

  std::vector<float> means(std::size_t{spec.k_true} * dim);
  for (std::uint32_t c = 0; c < spec.k_true; ++c) random_unit(rng, means.data() + std::size_t{c} * dim, dim);

  std::vector<std::int32_t> labels;
  labels.reserve(spec.n);
  for (std::uint32_t c = 0; c < spec.k_true; ++c) labels.insert(labels.end(), sizes[c], static_cast<std::int32_t>(c));
  labels.insert(labels.end(), noise, -1);
  for (std::size_t i = 0; i + 1 < spec.n; ++i) {
    std::swap(labels[i], labels[i + static_cast<std::size_t>(rng.below(spec.n - i))]);
  }

  std::vector<float> data(spec.n * dim);
  std::vector<std::string> ids(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    float* row = data.data() + i * dim;
    if (labels[i] < 0) {
      random_unit(rng, row, dim);
    } else {
      perturbed(rng, means.data() + static_cast<std::size_t>(labels[i]) * dim, spec.spread, row, dim);
    }
    ids[i] = make_id(spec.id_prefix, i);
  }

  SyntheticCorpus out;
  out.matrix = EmbeddingMatrix(std::move(ids), dim, std::move(data));
  out.labels = std::move(labels);
  out.means = std::move(means);
  out.component_sizes = sizes;
  return out;
}

EmbeddingMatrix random_unit_matrix(std::size_t n, std::uint32_t dim, std::uint64_t seed,
                                   const std::string& id_prefix) {
  Rng rng(seed);
  std::vector<float> data(n * dim);
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    random_unit(rng, data.data() + i * dim, dim);
    ids[i] = make_id(id_prefix, i);
  }
  return EmbeddingMatrix(std::move(ids), dim, std::move(data));
}

}  // namespace rsprune
