#include "gtfhsr/tensor.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gtfhsr {

namespace {

Index checked_product(const std::vector<Index>& dims) {
  if (dims.empty()) throw std::invalid_argument("tensor must have at least one mode");
  Index n = 1;
  for (Index d : dims) {
    if (d <= 0) throw std::invalid_argument("tensor extents must be positive");
    n *= d;
  }
  return n;
}

// Extent products below / at / above the given 1-based mode.
struct ModeSplit {
  Index below, at, above;
};

ModeSplit split(const std::vector<Index>& dims, int mode) {
  if (mode < 1 || mode > static_cast<int>(dims.size()))
    throw std::invalid_argument("mode index out of range");
  ModeSplit s{1, dims[static_cast<size_t>(mode - 1)], 1};
  for (int k = 0; k < mode - 1; ++k) s.below *= dims[static_cast<size_t>(k)];
  for (size_t k = static_cast<size_t>(mode); k < dims.size(); ++k) s.above *= dims[k];
  return s;
}

}  // namespace

Tensor::Tensor(std::vector<Index> dims) : dims_(std::move(dims)) {
  data_ = Vector::Zero(checked_product(dims_));
}

Tensor::Tensor(std::vector<Index> dims, Vector data) : dims_(std::move(dims)), data_(std::move(data)) {
  if (data_.size() != checked_product(dims_))
    throw std::invalid_argument("data length does not match extents");
  if (!data_.allFinite()) throw std::invalid_argument("tensor entries must be finite");
}

Index Tensor::offset(std::initializer_list<Index> idx) const {
  if (static_cast<Index>(idx.size()) != order())
    throw std::invalid_argument("index arity mismatch");
  Index off = 0, stride = 1;
  size_t k = 0;
  for (Index i : idx) {
    if (i < 0 || i >= dims_[k]) throw std::out_of_range("tensor index out of range");
    off += i * stride;
    stride *= dims_[k++];
  }
  return off;
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("shape mismatch");
  return Tensor(a.dims(), a.flat() + b.flat());
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("shape mismatch");
  return Tensor(a.dims(), a.flat() - b.flat());
}

Tensor operator*(double s, const Tensor& t) { return Tensor(t.dims(), s * t.flat()); }

Tensor& operator+=(Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("shape mismatch");
  a.flat() += b.flat();
  return a;
}

Tensor& operator-=(Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("shape mismatch");
  a.flat() -= b.flat();
  return a;
}

Matrix mode_unfold(const Tensor& t, int mode) {
  const auto s = split(t.dims(), mode);
  Matrix out(s.at, s.below * s.above);
  const double* src = t.data();
  for (Index b = 0; b < s.above; ++b)
    for (Index i = 0; i < s.at; ++i)
      for (Index a = 0; a < s.below; ++a)
        out(i, a + b * s.below) = src[a + i * s.below + b * s.below * s.at];
  return out;
}

Tensor mode_fold(const Matrix& m, int mode, const std::vector<Index>& dims) {
  const auto s = split(dims, mode);
  if (m.rows() != s.at || m.cols() != s.below * s.above)
    throw std::invalid_argument("matrix shape inconsistent with fold extents");
  Tensor t(dims);
  double* dst = t.data();
  for (Index b = 0; b < s.above; ++b)
    for (Index i = 0; i < s.at; ++i)
      for (Index a = 0; a < s.below; ++a)
        dst[a + i * s.below + b * s.below * s.at] = m(i, a + b * s.below);
  return t;
}

Tensor mode_product(const Tensor& t, const Matrix& u, int mode) {
  const auto s = split(t.dims(), mode);
  if (u.cols() != s.at) throw std::invalid_argument("mode-product dimension mismatch");
  std::vector<Index> out_dims = t.dims();
  out_dims[static_cast<size_t>(mode - 1)] = u.rows();
  Tensor out(out_dims);
  // For each trailing slab the leading (below x at) block is contiguous
  // column-major, so the product reduces to one GEMM per slab.
  const Index in_slab = s.below * s.at;
  const Index out_slab = s.below * u.rows();
  for (Index b = 0; b < s.above; ++b) {
    Eigen::Map<const Matrix> in(t.data() + b * in_slab, s.below, s.at);
    Eigen::Map<Matrix> dst(out.data() + b * out_slab, s.below, u.rows());
    dst = in * u.transpose();
  }
  return out;
}

Tensor tucker_reconstruct(const TuckerFactors& f) {
  Tensor z = mode_product(f.core, f.u1, 1);
  z = mode_product(z, f.u2, 2);
  z = mode_product(z, f.u3, 3);
  return z;
}

Svd svd_truncate(const Matrix& m, Index k) {
  if (k < 0 || k > std::min(m.rows(), m.cols()))
    throw std::invalid_argument("truncation rank out of range");
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw std::runtime_error("SVD failed to converge");
  Svd out;
  out.u = svd.matrixU().leftCols(k);
  out.s = svd.singularValues().head(k);
  out.v = svd.matrixV().leftCols(k);
  for (Index j = 0; j < k; ++j) {
    Index imax = 0;
    double best = -1.0;
    for (Index i = 0; i < out.u.rows(); ++i) {
      const double a = std::abs(out.u(i, j));
      if (a > best) {
        best = a;
        imax = i;
      }
    }
    if (out.u(imax, j) < 0.0) {
      out.u.col(j) = -out.u.col(j);
      out.v.col(j) = -out.v.col(j);
    }
  }
  return out;
}

Index numeric_rank(const Matrix& m, double rel_tol) {
  Eigen::BDCSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  const double cut = rel_tol * s(0);
  Index r = 0;
  while (r < s.size() && s(r) > cut) ++r;
  return r;
}

double frobenius_norm(const Tensor& t) { return t.flat().norm(); }

double inner_product(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("shape mismatch");
  return a.flat().dot(b.flat());
}

Vector vec(const Tensor& t) { return t.flat(); }

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unvec(const Vector& v, Index rows, Index cols) {
  if (v.size() != rows * cols) throw std::invalid_argument("unvec length mismatch");
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

double rel_error(const Tensor& a, const Tensor& b) {
  const double den = std::max(frobenius_norm(b), 1e-300);
  return frobenius_norm(a - b) / den;
}

double rel_error(const Matrix& a, const Matrix& b) {
  const double den = std::max(b.norm(), 1e-300);
  return (a - b).norm() / den;
}

}  // namespace gtfhsr
