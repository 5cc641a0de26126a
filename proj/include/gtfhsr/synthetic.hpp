#pragma once

#include "gtfhsr/tensor.hpp"

#include <cstdint>
#include <random>

namespace gtfhsr {

/// Deterministic random source. std::mt19937_64 output is standardized, and
/// the uniform/normal transforms are written out here, so streams are
/// bit-identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal();

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

Matrix random_matrix(Rng& rng, Index rows, Index cols);

/// Matrix with columns smoothed along the row index by `passes` cyclic
/// three-point averages; used for spatially/spectrally coherent factors.
Matrix smooth_random_matrix(Rng& rng, Index rows, Index cols, int passes);

/// Seeded synthetic scene of exact Tucker rank (l1, l2, c): a random core
/// mixed through smooth factor matrices. With positive_shift the scene is
/// translated into a positive range (which raises each modal rank by one but
/// gives image-like data for metric evaluation).
Tensor make_synthetic_sri(Index m1, Index m2, Index bands, Index l1, Index l2, Index c,
                          std::uint64_t seed, bool positive_shift = true);

}  // namespace gtfhsr
