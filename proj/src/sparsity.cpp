#include "gtfhsr/sparsity.hpp"

#include <cmath>
#include <stdexcept>

namespace gtfhsr {

namespace {

struct BlockGrid {
  std::vector<Index> t, s;  // block extents, grid extents
  Index block_size = 1, block_count = 1;
};

BlockGrid make_grid(const std::vector<Index>& dims, const BlockShape& bs) {
  if (bs.t.size() != dims.size())
    throw std::invalid_argument("block shape order does not match tensor order");
  BlockGrid g;
  g.t = bs.t;
  g.s.resize(dims.size());
  for (size_t n = 0; n < dims.size(); ++n) {
    if (g.t[n] <= 0 || dims[n] % g.t[n] != 0)
      throw std::invalid_argument("block extent must divide tensor extent");
    g.s[n] = dims[n] / g.t[n];
    g.block_size *= g.t[n];
    g.block_count *= g.s[n];
  }
  return g;
}

}  // namespace

Matrix b_unfold(const Tensor& t, const BlockShape& bs) {
  const auto g = make_grid(t.dims(), bs);
  const size_t order = t.dims().size();
  Matrix out(g.block_size, g.block_count);
  std::vector<Index> idx(order, 0);
  const double* src = t.data();
  for (Index p = 0; p < t.size(); ++p) {
    Index row = 0, col = 0, rstride = 1, cstride = 1;
    for (size_t n = 0; n < order; ++n) {
      row += (idx[n] % g.t[n]) * rstride;
      col += (idx[n] / g.t[n]) * cstride;
      rstride *= g.t[n];
      cstride *= g.s[n];
    }
    out(row, col) = src[p];
    for (size_t n = 0; n < order; ++n) {
      if (++idx[n] < t.dims()[n]) break;
      idx[n] = 0;
    }
  }
  return out;
}

Tensor b_fold(const Matrix& m, const BlockShape& bs, const std::vector<Index>& dims) {
  const auto g = make_grid(dims, bs);
  if (m.rows() != g.block_size || m.cols() != g.block_count)
    throw std::invalid_argument("matrix shape inconsistent with block fold");
  Tensor t(dims);
  const size_t order = dims.size();
  std::vector<Index> idx(order, 0);
  double* dst = t.data();
  for (Index p = 0; p < t.size(); ++p) {
    Index row = 0, col = 0, rstride = 1, cstride = 1;
    for (size_t n = 0; n < order; ++n) {
      row += (idx[n] % g.t[n]) * rstride;
      col += (idx[n] / g.t[n]) * cstride;
      rstride *= g.t[n];
      cstride *= g.s[n];
    }
    dst[p] = m(row, col);
    for (size_t n = 0; n < order; ++n) {
      if (++idx[n] < dims[n]) break;
      idx[n] = 0;
    }
  }
  return t;
}

Index l20(const Matrix& m) {
  Index count = 0;
  for (Index j = 0; j < m.cols(); ++j)
    if (m.col(j).norm() > 0.0) ++count;
  return count;
}

Index l20_eps(const Matrix& m, double eps) {
  Index count = 0;
  for (Index j = 0; j < m.cols(); ++j)
    if (m.col(j).norm() > eps) ++count;
  return count;
}

double l2gamma(const Matrix& m, double gamma) {
  if (gamma <= 0.0) throw std::invalid_argument("gamma must be positive");
  double sum = 0.0;
  for (Index j = 0; j < m.cols(); ++j) sum += 1.0 - std::exp(-m.col(j).norm() / gamma);
  return sum;
}

Matrix prox_l2gamma(const Matrix& m, double rho, double gamma, double tol, int max_iter,
                    ProxInfo* info) {
  if (rho <= 0.0 || gamma <= 0.0) throw std::invalid_argument("rho and gamma must be positive");
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  ProxInfo local;
  const auto objective = [&](double t, double norm) {
    return 0.5 * rho * (t - norm) * (t - norm) + 1.0 - std::exp(-t / gamma);
  };
  for (Index j = 0; j < m.cols(); ++j) {
    const double norm = m.col(j).norm();
    if (norm == 0.0) continue;
    // Decreasing from t0 = ||m||, the iteration converges monotonically to
    // the largest stationary point in [0, ||m||].
    double t = norm;
    int it = 0;
    bool done = false;
    const double step_tol = tol * std::max(1.0, norm);
    for (; it < max_iter; ++it) {
      const double next = std::max(0.0, norm - std::exp(-t / gamma) / (rho * gamma));
      const double delta = std::abs(next - t);
      t = next;
      if (delta <= step_tol) {
        done = true;
        break;
      }
    }
    if (!done) local.converged = false;
    local.worst_iterations = std::max(local.worst_iterations, it + 1);
    if (objective(t, norm) <= objective(0.0, norm)) {
      out.col(j) = (t / norm) * m.col(j);
    }  // else the column collapses to zero
  }
  if (info != nullptr) *info = local;
  return out;
}

Matrix soft_threshold(const Matrix& m, double tau) {
  if (tau < 0.0) throw std::invalid_argument("threshold must be nonnegative");
  return m.unaryExpr([tau](double x) {
    const double mag = std::abs(x) - tau;
    return mag > 0.0 ? (x > 0.0 ? mag : -mag) : 0.0;
  });
}

}  // namespace gtfhsr
