#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rsprune/embedding.hpp"

namespace rsprune {

/// Centroids re-laid out for batched inner products: blocks of 16 centroids,
/// each block stored dimension-major so one embedding coordinate multiplies
/// 16 contiguous centroid coordinates. Padding centroids are zero and never
/// reported.
///
/// Every similarity is accumulated as float in increasing coordinate order,
/// exactly like `dot_sequential`, so results are independent of blocking,
/// vector width and worker count.
class CentroidPanel {
 public:
  static constexpr std::size_t kBlock = 16;

  explicit CentroidPanel(MatrixView centroids);

  std::size_t k() const noexcept { return k_; }
  std::uint32_t dim() const noexcept { return dim_; }

  /// For each row: label = argmax_k <row, centroid_k> (smallest k on ties),
  /// sim = the maximum.
  void argmax(MatrixView rows, std::span<std::uint32_t> labels, std::span<float> sims) const;

  /// All K similarities of each row, row-major into `out` (rows * K).
  void similarities(MatrixView rows, std::span<float> out) const;

 private:
  std::size_t k_ = 0;
  std::uint32_t dim_ = 0;
  std::size_t blocks_ = 0;
  std::vector<float> panel_;
};

/// Float inner product accumulated in coordinate order.
float dot_sequential(std::span<const float> a, std::span<const float> b);

}  // namespace rsprune
