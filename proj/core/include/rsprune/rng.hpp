#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rsprune {

// Deterministic across standard libraries: only the raw mt19937_64 stream is
// used; distributions are computed here rather than via <random> adaptors,
// whose algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1).
  double uniform();
  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  // Standard normal (Box-Muller, one cached deviate).
  double normal();

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

// Per-stage seed: FNV-1a of the stage name mixed into the top-level seed with
// splitmix64. Stable across platforms and releases.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage);

}  // namespace rsprune
