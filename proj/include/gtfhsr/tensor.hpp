#pragma once

#include <Eigen/Dense>

#include <initializer_list>
#include <vector>

namespace gtfhsr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Dense N-order tensor of 64-bit floats. Storage is a flat column-major
/// buffer: the first index varies fastest, so a 3-order tensor laid out as
/// (i1, i2, i3) has flat offset i1 + I1*i2 + I1*I2*i3. All reshape-style
/// operations (vec, unfolding, B-unfolding) are defined against this layout.
class Tensor {
 public:
  Tensor() = default;

  /// Zero-filled tensor with the given extents.
  explicit Tensor(std::vector<Index> dims);

  /// Adopts a flat buffer already in layout order. Validates length and
  /// rejects non-finite entries.
  Tensor(std::vector<Index> dims, Vector data);

  const std::vector<Index>& dims() const { return dims_; }
  Index order() const { return static_cast<Index>(dims_.size()); }
  Index size() const { return data_.size(); }
  Index dim(int n) const { return dims_.at(static_cast<size_t>(n)); }

  Vector& flat() { return data_; }
  const Vector& flat() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& at(std::initializer_list<Index> idx) { return data_[offset(idx)]; }
  double at(std::initializer_list<Index> idx) const { return data_[offset(idx)]; }

  bool same_shape(const Tensor& other) const { return dims_ == other.dims_; }

 private:
  Index offset(std::initializer_list<Index> idx) const;

  std::vector<Index> dims_;
  Vector data_;
};

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(double s, const Tensor& t);
Tensor& operator+=(Tensor& a, const Tensor& b);
Tensor& operator-=(Tensor& a, const Tensor& b);

/// Mode-n unfolding (n is 1-based). Row index is the mode-n index; columns
/// run over the remaining indices lexicographically, lowest mode fastest.
/// Mode-1 unfolding of a 3-order tensor is a pure reshape.
Matrix mode_unfold(const Tensor& t, int mode);

/// Inverse of mode_unfold; bit-exact roundtrip.
Tensor mode_fold(const Matrix& m, int mode, const std::vector<Index>& dims);

/// Mode-n product: (t x_n u) has mode-n extent u.rows() and satisfies
/// mode_unfold(t x_n u, n) = u * mode_unfold(t, n).
Tensor mode_product(const Tensor& t, const Matrix& u, int mode);

struct TuckerFactors {
  Tensor core;  // L1 x L2 x C
  Matrix u1;    // M1 x L1
  Matrix u2;    // M2 x L2
  Matrix u3;    // S  x C
};

/// core x1 u1 x2 u2 x3 u3.
Tensor tucker_reconstruct(const TuckerFactors& f);

struct Svd {
  Matrix u;
  Vector s;  // descending, nonnegative
  Matrix v;
};

/// Thin SVD truncated to rank k with a deterministic sign convention: the
/// largest-magnitude entry of each left singular vector is nonnegative
/// (lowest index wins ties).
Svd svd_truncate(const Matrix& m, Index k);

/// Count of singular values exceeding rel_tol times the largest; 0 for the
/// zero matrix.
Index numeric_rank(const Matrix& m, double rel_tol);

double frobenius_norm(const Tensor& t);
double inner_product(const Tensor& a, const Tensor& b);

/// Column-major flattening, consistent with the tensor layout.
Vector vec(const Tensor& t);
Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Index rows, Index cols);

/// Relative Frobenius distance ||a - b|| / max(||b||, floor).
double rel_error(const Tensor& a, const Tensor& b);
double rel_error(const Matrix& a, const Matrix& b);

}  // namespace gtfhsr
