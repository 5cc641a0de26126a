#pragma once

#include "gtfhsr/tensor.hpp"

#include <variant>
#include <vector>

namespace gtfhsr {

/// Shape of a Kronecker-structured matrix W in R^{J1*J2 x K1*K2}, read as a
/// J1 x K1 grid of J2 x K2 blocks.
struct KronShape {
  Index j1, j2, k1, k2;

  Index rows() const { return j1 * j2; }
  Index cols() const { return k1 * k2; }
  Index rearranged_rows() const { return j1 * k1; }
  Index rearranged_cols() const { return j2 * k2; }
};

/// Rank selection for kron_decompose: either an explicit term count or the
/// smallest count capturing an energy fraction eta of the squared singular
/// values of the rearrangement.
struct ExactRank {
  Index r;
};
struct Energy {
  double eta;
};
using DecompPolicy = std::variant<ExactRank, Energy>;

struct KroneckerDecomposition {
  KronShape shape;
  std::vector<Matrix> left;   // J1 x K1 factors
  std::vector<Matrix> right;  // J2 x K2 factors
  double residual_fro = 0.0;
};

Matrix kron(const Matrix& a, const Matrix& b);

/// The rearrangement map: rearrange(kron(M1, M2), s) == vec(M1) * vec(M2)^T.
/// A pure index permutation, exact and linear.
Matrix rearrange(const Matrix& w, const KronShape& s);

/// Inverse permutation; rearrange_inverse(rearrange(w)) == w bit-exactly.
Matrix rearrange_inverse(const Matrix& m, const KronShape& s);

/// Kronecker rank: numeric rank of the rearrangement at rel_tol.
Index kron_rank(const Matrix& w, const KronShape& s, double rel_tol = 1e-8);

/// Truncated SVD of the rearrangement, folded back into Kronecker factor
/// pairs with the sqrt of each singular value split across both sides.
KroneckerDecomposition kron_decompose(const Matrix& w, const KronShape& s, const DecompPolicy& policy);

/// Sum of left_r (x) right_r.
Matrix kron_reconstruct(const KroneckerDecomposition& d);

}  // namespace gtfhsr
