#pragma once

#include "gtfhsr/tensor.hpp"

#include <vector>

namespace gtfhsr {

/// Per-mode block extents [t1..tN]. Each tn must divide the extent of the
/// tensor the shape is applied to; sn = Tn / tn is the block-grid extent.
struct BlockShape {
  std::vector<Index> t;
};

/// Blockwise unfolding: each t1 x ... x tN subblock becomes one column, in
/// layout order within the block; columns run over the block grid in layout
/// order. An entry bijection, so the Frobenius norm is preserved exactly.
Matrix b_unfold(const Tensor& t, const BlockShape& bs);

/// Inverse of b_unfold; bit-exact roundtrip.
Tensor b_fold(const Matrix& m, const BlockShape& bs, const std::vector<Index>& dims);

/// Number of columns with nonzero Euclidean norm (exact zero test).
Index l20(const Matrix& m);

/// Tolerant variant: columns with norm > eps.
Index l20_eps(const Matrix& m, double eps);

/// Laplace surrogate of the column-counting norm:
/// sum_i (1 - exp(-||col_i|| / gamma)).
double l2gamma(const Matrix& m, double gamma);

struct ProxInfo {
  bool converged = true;     // every column's fixed point met tol
  int worst_iterations = 0;  // largest per-column iteration count
};

/// Columnwise proximal operator of ||.||_{2,gamma} with quadratic weight
/// rho/2: each output column is t* m_i / ||m_i|| where t* >= 0 minimizes
///   h(t) = rho/2 (t - ||m_i||)^2 + 1 - exp(-t / gamma).
/// Solved by the shrinkage fixed point t <- max(0, ||m|| - exp(-t/gamma)/(rho*gamma))
/// started at ||m||, then compared against t = 0 (the second candidate
/// minimum of the nonconvex objective).
Matrix prox_l2gamma(const Matrix& m, double rho, double gamma, double tol = 1e-10,
                    int max_iter = 100, ProxInfo* info = nullptr);

/// Elementwise sign(x) * max(|x| - tau, 0).
Matrix soft_threshold(const Matrix& m, double tau);

}  // namespace gtfhsr
