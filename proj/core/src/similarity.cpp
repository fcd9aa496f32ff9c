#include "rsprune/similarity.hpp"

#include <algorithm>
#include <cstring>
#include <limits>

#include "rsprune/errors.hpp"

namespace rsprune {

namespace {

constexpr std::size_t kB = CentroidPanel::kBlock;
constexpr std::size_t kRows = 4;

// acc[r][c] = sum_j x_r[j] * panel[j][c] for up to kRows rows against one
// centroid block. Each lane accumulates in order j = 0, 1, ..., dim-1 with a
// separate multiply and add, matching dot_sequential bit for bit.
typedef float v8f __attribute__((vector_size(32)));

#define RSPRUNE_LOAD8(v, p) \
  v8f v;                    \
  std::memcpy(&v, (p), sizeof(v8f))
#define RSPRUNE_SPLAT(x) v8f{x, x, x, x, x, x, x, x}

static_assert(kB == 16, "block kernel is written for two 8-lane vectors");

#if defined(__x86_64__) && defined(__GNUC__) && !defined(__clang__)
__attribute__((target_clones("avx2", "default")))
#endif
void block_dot(const float* const* rows, std::size_t nrows, const float* panel, std::uint32_t dim,
               float (*acc)[kB]) {
  if (nrows == kRows) {
    v8f a0l{}, a0h{}, a1l{}, a1h{}, a2l{}, a2h{}, a3l{}, a3h{};
    const float *x0 = rows[0], *x1 = rows[1], *x2 = rows[2], *x3 = rows[3];
    for (std::uint32_t j = 0; j < dim; ++j) {
      const float* p = panel + std::size_t{j} * kB;
      RSPRUNE_LOAD8(pl, p);
      RSPRUNE_LOAD8(ph, p + 8);
      const float s0 = x0[j], s1 = x1[j], s2 = x2[j], s3 = x3[j];
      const v8f b0 = RSPRUNE_SPLAT(s0), b1 = RSPRUNE_SPLAT(s1), b2 = RSPRUNE_SPLAT(s2), b3 = RSPRUNE_SPLAT(s3);
      a0l += b0 * pl;
      a0h += b0 * ph;
      a1l += b1 * pl;
      a1h += b1 * ph;
      a2l += b2 * pl;
      a2h += b2 * ph;
      a3l += b3 * pl;
      a3h += b3 * ph;
    }
    std::memcpy(acc[0], &a0l, sizeof(v8f));
    std::memcpy(acc[0] + 8, &a0h, sizeof(v8f));
    std::memcpy(acc[1], &a1l, sizeof(v8f));
    std::memcpy(acc[1] + 8, &a1h, sizeof(v8f));
    std::memcpy(acc[2], &a2l, sizeof(v8f));
    std::memcpy(acc[2] + 8, &a2h, sizeof(v8f));
    std::memcpy(acc[3], &a3l, sizeof(v8f));
    std::memcpy(acc[3] + 8, &a3h, sizeof(v8f));
    return;
  }
  for (std::size_t r = 0; r < nrows; ++r) {
    v8f al{}, ah{};
    const float* x = rows[r];
    for (std::uint32_t j = 0; j < dim; ++j) {
      const float* p = panel + std::size_t{j} * kB;
      const float sx = x[j];
      const v8f b = RSPRUNE_SPLAT(sx);
      RSPRUNE_LOAD8(pl, p);
      RSPRUNE_LOAD8(ph, p + 8);
      al += b * pl;
      ah += b * ph;
    }
    std::memcpy(acc[r], &al, sizeof(v8f));
    std::memcpy(acc[r] + 8, &ah, sizeof(v8f));
  }
}

#undef RSPRUNE_LOAD8
#undef RSPRUNE_SPLAT

template <typename Sink>
void for_each_block(const CentroidPanel& panel, const std::vector<float>& data, std::size_t blocks,
                    MatrixView rows, Sink&& sink) {
  const std::uint32_t dim = panel.dim();
  float acc[kRows][kB];
  const float* ptrs[kRows];
  for (std::size_t r0 = 0; r0 < rows.rows; r0 += kRows) {
    const std::size_t nr = std::min(kRows, rows.rows - r0);
    for (std::size_t r = 0; r < nr; ++r) ptrs[r] = rows.data.data() + (r0 + r) * dim;
    for (std::size_t b = 0; b < blocks; ++b) {
      block_dot(ptrs, nr, data.data() + b * std::size_t{dim} * kB, dim, acc);
      sink(r0, nr, b * kB, acc);
    }
  }
}

}  // namespace

CentroidPanel::CentroidPanel(MatrixView centroids) : k_(centroids.rows), dim_(centroids.dim) {
  blocks_ = (k_ + kB - 1) / kB;
  panel_.assign(blocks_ * dim_ * kB, 0.0f);
  for (std::size_t k = 0; k < k_; ++k) {
    const auto c = centroids.row(k);
    const std::size_t b = k / kB, lane = k % kB;
    for (std::uint32_t j = 0; j < dim_; ++j) panel_[(b * dim_ + j) * kB + lane] = c[j];
  }
}

void CentroidPanel::argmax(MatrixView rows, std::span<std::uint32_t> labels, std::span<float> sims) const {
  if (rows.dim != dim_) fail(ErrorKind::precondition, "dimension mismatch between rows and centroids");
  if (labels.size() != rows.rows || sims.size() != rows.rows) {
    fail(ErrorKind::precondition, "output spans must have one slot per row");
  }
  if (k_ == 0) fail(ErrorKind::precondition, "no centroids");
  std::fill(labels.begin(), labels.end(), 0u);
  std::fill(sims.begin(), sims.end(), -std::numeric_limits<float>::infinity());
  const std::size_t k = k_;
  for_each_block(*this, panel_, blocks_, rows,
                 [&](std::size_t r0, std::size_t nr, std::size_t k0, const float (*acc)[kB]) {
                   const std::size_t lanes = std::min(kB, k - k0);
                   for (std::size_t r = 0; r < nr; ++r) {
                     float best = sims[r0 + r];
                     std::uint32_t label = labels[r0 + r];
                     for (std::size_t c = 0; c < lanes; ++c) {
                       if (acc[r][c] > best) {
                         best = acc[r][c];
                         label = static_cast<std::uint32_t>(k0 + c);
                       }
                     }
                     sims[r0 + r] = best;
                     labels[r0 + r] = label;
                   }
                 });
}

void CentroidPanel::similarities(MatrixView rows, std::span<float> out) const {
  if (rows.dim != dim_) fail(ErrorKind::precondition, "dimension mismatch between rows and centroids");
  if (out.size() != rows.rows * k_) fail(ErrorKind::precondition, "output span has wrong size");
  const std::size_t k = k_;
  for_each_block(*this, panel_, blocks_, rows,
                 [&](std::size_t r0, std::size_t nr, std::size_t k0, const float (*acc)[kB]) {
                   const std::size_t lanes = std::min(kB, k - k0);
                   for (std::size_t r = 0; r < nr; ++r) {
                     std::copy_n(acc[r], lanes, out.data() + (r0 + r) * k + k0);
                   }
                 });
}

float dot_sequential(std::span<const float> a, std::span<const float> b) {
  float s = 0.0f;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

}  // namespace rsprune
