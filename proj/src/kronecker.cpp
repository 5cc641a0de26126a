#include "gtfhsr/kronecker.hpp"

#include <cmath>
#include <stdexcept>

namespace gtfhsr {

namespace {

void check_shape(const Matrix& w, const KronShape& s) {
  if (s.j1 <= 0 || s.j2 <= 0 || s.k1 <= 0 || s.k2 <= 0)
    throw std::invalid_argument("KronShape extents must be positive");
  if (w.rows() != s.rows() || w.cols() != s.cols())
    throw std::invalid_argument("matrix shape inconsistent with KronShape");
}

}  // namespace

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix rearrange(const Matrix& w, const KronShape& s) {
  check_shape(w, s);
  Matrix out(s.rearranged_rows(), s.rearranged_cols());
  for (Index j = 0; j < s.k1; ++j)
    for (Index i = 0; i < s.j1; ++i)
      out.row(i + j * s.j1) =
          vec(w.block(i * s.j2, j * s.k2, s.j2, s.k2)).transpose();
  return out;
}

Matrix rearrange_inverse(const Matrix& m, const KronShape& s) {
  if (m.rows() != s.rearranged_rows() || m.cols() != s.rearranged_cols())
    throw std::invalid_argument("matrix shape inconsistent with rearranged KronShape");
  Matrix out(s.rows(), s.cols());
  for (Index j = 0; j < s.k1; ++j)
    for (Index i = 0; i < s.j1; ++i)
      out.block(i * s.j2, j * s.k2, s.j2, s.k2) =
          unvec(m.row(i + j * s.j1).transpose(), s.j2, s.k2);
  return out;
}

Index kron_rank(const Matrix& w, const KronShape& s, double rel_tol) {
  if (rel_tol <= 0.0 || rel_tol >= 1.0)
    throw std::invalid_argument("rel_tol must be in (0, 1)");
  return numeric_rank(rearrange(w, s), rel_tol);
}

KroneckerDecomposition kron_decompose(const Matrix& w, const KronShape& s, const DecompPolicy& policy) {
  const Matrix re = rearrange(w, s);
  const Index kmax = std::min(re.rows(), re.cols());
  Svd svd = svd_truncate(re, kmax);

  Index r = 0;
  if (const auto* er = std::get_if<ExactRank>(&policy)) {
    if (er->r < 1 || er->r > kmax) throw std::invalid_argument("exact rank out of range");
    r = er->r;
  } else {
    const double eta = std::get<Energy>(policy).eta;
    if (eta <= 0.0 || eta > 1.0) throw std::invalid_argument("energy fraction must be in (0, 1]");
    const double total = svd.s.squaredNorm();
    if (total == 0.0) {
      r = 1;  // zero matrix: a single zero pair reproduces it
    } else {
      double acc = 0.0;
      while (r < kmax) {
        acc += svd.s(r) * svd.s(r);
        ++r;
        if (acc >= eta * total) break;
      }
    }
  }

  KroneckerDecomposition out;
  out.shape = s;
  out.left.reserve(static_cast<size_t>(r));
  out.right.reserve(static_cast<size_t>(r));
  for (Index i = 0; i < r; ++i) {
    const double scale = std::sqrt(svd.s(i));
    out.left.push_back(unvec(scale * svd.u.col(i), s.j1, s.k1));
    out.right.push_back(unvec(scale * svd.v.col(i), s.j2, s.k2));
  }
  out.residual_fro = svd.s.tail(kmax - r).norm();
  return out;
}

Matrix kron_reconstruct(const KroneckerDecomposition& d) {
  Matrix out = Matrix::Zero(d.shape.rows(), d.shape.cols());
  for (size_t i = 0; i < d.left.size(); ++i) out += kron(d.left[i], d.right[i]);
  return out;
}

}  // namespace gtfhsr
