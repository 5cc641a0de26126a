#include "gtfhsr/synthetic.hpp"

#include <cmath>

namespace gtfhsr {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  constexpr double two_pi = 6.283185307179586476925286766559;
  spare_ = mag * std::sin(two_pi * u2);
  has_spare_ = true;
  return mag * std::cos(two_pi * u2);
}

Matrix random_matrix(Rng& rng, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

Matrix smooth_random_matrix(Rng& rng, Index rows, Index cols, int passes) {
  Matrix m = random_matrix(rng, rows, cols);
  Vector tmp(rows);
  for (int p = 0; p < passes; ++p) {
    for (Index j = 0; j < cols; ++j) {
      for (Index i = 0; i < rows; ++i) {
        const Index up = (i + 1) % rows, down = (i + rows - 1) % rows;
        tmp(i) = 0.25 * m(down, j) + 0.5 * m(i, j) + 0.25 * m(up, j);
      }
      m.col(j) = tmp;
    }
  }
  return m;
}

Tensor make_synthetic_sri(Index m1, Index m2, Index bands, Index l1, Index l2, Index c,
                          std::uint64_t seed, bool positive_shift) {
  Rng rng(seed);
  TuckerFactors f;
  f.core = Tensor({l1, l2, c});
  for (Index i = 0; i < f.core.size(); ++i) f.core.flat()(i) = rng.normal();
  f.u1 = smooth_random_matrix(rng, m1, l1, 8);
  f.u2 = smooth_random_matrix(rng, m2, l2, 8);
  f.u3 = smooth_random_matrix(rng, bands, c, 4);
  Tensor z = tucker_reconstruct(f);
  if (positive_shift) {
    const double lo = z.flat().minCoeff(), hi = z.flat().maxCoeff();
    const double span = hi > lo ? hi - lo : 1.0;
    z.flat() = (z.flat().array() - lo) / span + 0.05;
  }
  return z;
}

}  // namespace gtfhsr
