#include "gtfhsr/solver.hpp"

#include "gtfhsr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gtfhsr {

namespace {

constexpr double kTiny = 1e-300;

double rel_change(const Matrix& current, const Matrix& previous) {
  const double denom = previous.norm();
  if (denom == 0.0) return current.norm() == 0.0 ? 0.0 : 1e30;
  return (current - previous).norm() / denom;
}

double rel_change(const Tensor& current, const Tensor& previous) {
  const double denom = frobenius_norm(previous);
  if (denom == 0.0) return frobenius_norm(current) == 0.0 ? 0.0 : 1e30;
  return frobenius_norm(current - previous) / denom;
}

// Eigendecompositions of the three Gram matrices; reused across iterations
// when the factor matrices are fixed.
struct SylvesterCache {
  Matrix v1, v2, v3;
  Vector e1, e2, e3;

  SylvesterCache(const Matrix& q1, const Matrix& q2, const Matrix& q3) {
    const auto decompose = [](const Matrix& q, Matrix& v, Vector& e) {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(q.transpose() * q);
      if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
      v = eig.eigenvectors();
      e = eig.eigenvalues().cwiseMax(0.0);
    };
    decompose(q1, v1, e1);
    decompose(q2, v2, e2);
    decompose(q3, v3, e3);
  }

  // argmin_s ||h - s x1 q1 x2 q2 x3 q3||^2 + tau ||s - k||^2, given
  // t = h x1 q1^T x2 q2^T x3 q3^T already formed by the caller.
  Tensor solve_from_projection(Tensor t, const Tensor& k, double tau) const {
    if (tau < 0.0) throw std::invalid_argument("tau must be nonnegative");
    if (tau > 0.0) t += tau * k;
    t = mode_product(t, v1.transpose(), 1);
    t = mode_product(t, v2.transpose(), 2);
    t = mode_product(t, v3.transpose(), 3);
    const Index n1 = e1.size(), n2 = e2.size(), n3 = e3.size();
    double* p = t.data();
    for (Index l = 0; l < n3; ++l)
      for (Index j = 0; j < n2; ++j)
        for (Index i = 0; i < n1; ++i) {
          const double denom = e1(i) * e2(j) * e3(l) + tau;
          if (denom <= 0.0)
            throw std::invalid_argument("singular diagonal system: tau = 0 with rank-deficient factors");
          p[i + j * n1 + l * n1 * n2] /= denom;
        }
    t = mode_product(t, v1, 1);
    t = mode_product(t, v2, 2);
    t = mode_product(t, v3, 3);
    return t;
  }
};

Tensor project(const Tensor& h, const Matrix& q1, const Matrix& q2, const Matrix& q3) {
  return mode_product(mode_product(mode_product(h, q1.transpose(), 1), q2.transpose(), 2),
                      q3.transpose(), 3);
}

Tensor forward(const Tensor& g, const Matrix& q1, const Matrix& q2, const Matrix& q3) {
  return mode_product(mode_product(mode_product(g, q1, 1), q2, 2), q3, 3);
}

}  // namespace

void SolverConfig::validate() const {
  if (c <= 0) throw std::invalid_argument("spectral rank must be positive");
  if (block.size() != 3) throw std::invalid_argument("block shape must have three entries");
  for (Index t : block)
    if (t <= 0) throw std::invalid_argument("block extents must be positive");
  if (mu <= 0.0) throw std::invalid_argument("mu must be positive");
  if (rho0 <= 0.0 || rho_max < rho0) throw std::invalid_argument("invalid rho schedule");
  if (nu <= 1.0) throw std::invalid_argument("nu must exceed 1");
  if (eps <= 0.0 || cg_tol <= 0.0 || prox_tol <= 0.0)
    throw std::invalid_argument("tolerances must be positive");
  if (admm_max_iter <= 0 || cg_max_iter <= 0 || prox_max_iter <= 0)
    throw std::invalid_argument("iteration caps must be positive");
  if (kr_truncate && *kr_truncate < 1)
    throw std::invalid_argument("kr_truncate must be at least 1");
}

SolverConfig SolverConfig::resolved(Index m1_full, Index m2_full, Index bands) const {
  SolverConfig r = *this;
  if (r.l1 <= 0) r.l1 = m1_full;
  if (r.l2 <= 0) r.l2 = m2_full;
  if (r.l1 > m1_full || r.l2 > m2_full)
    throw std::invalid_argument("spatial rank exceeds scene extent");
  // Default split keeps the MSI-derived atoms dominant at 15:1.
  if (r.k1 <= 0) r.k1 = r.l1 - std::max<Index>(1, r.l1 / 16);
  if (r.k2 <= 0) r.k2 = r.l2 - std::max<Index>(1, r.l2 / 16);
  if (r.k1 > r.l1 || r.k2 > r.l2)
    throw std::invalid_argument("K_i must not exceed L_i");
  if (r.c > bands) throw std::invalid_argument("spectral rank exceeds band count");
  r.validate();
  return r;
}

CgResult cg_solve(const std::function<Matrix(const Matrix&)>& apply_system, const Matrix& rhs,
                  const Matrix& x0, double tol, int max_iter) {
  CgResult out;
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    out.x = Matrix::Zero(rhs.rows(), rhs.cols());
    out.converged = true;
    return out;
  }
  out.x = x0;
  Matrix r = rhs - apply_system(out.x);
  Matrix p = r;
  double rr = r.squaredNorm();
  const double target = tol * bnorm;
  int it = 0;
  while (it < max_iter && std::sqrt(rr) > target) {
    ++it;
    const Matrix q = apply_system(p);
    const double pq = (p.array() * q.array()).sum();
    if (pq <= 0.0) break;  // semidefinite breakdown; current iterate is best
    const double alpha = rr / pq;
    out.x += alpha * p;
    r -= alpha * q;
    if (!out.x.allFinite())
      throw std::runtime_error("CG diverged at iteration " + std::to_string(it));
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  out.iterations = it;
  out.rel_residual = std::sqrt(rr) / bnorm;
  out.converged = std::sqrt(rr) <= target;
  return out;
}

Matrix identify_spatial_subspace(const Tensor& x, const Tensor& y, const DegradationModel& model,
                                 const SolverConfig& cfg, int i, StageDiagnostics* diag) {
  if (i != 1 && i != 2) throw std::invalid_argument("spatial mode must be 1 or 2");
  const std::vector<Matrix>& pairs = (i == 1) ? model.p1 : model.p2;
  if (pairs.empty()) throw std::invalid_argument("model has no factor pairs");
  const Index kr = static_cast<Index>(pairs.size());
  const Index li = (i == 1) ? cfg.l1 : cfg.l2;
  const Index ki = (i == 1) ? cfg.k1 : cfg.k2;

  StageDiagnostics local;
  const Matrix y_unf = mode_unfold(y, i);
  Svd ysvd = svd_truncate(y_unf, ki);
  if (ki > 0 && ysvd.s(ki - 1) <= 1e-10 * std::max(ysvd.s(0), kTiny)) local.rank_warning = true;
  Matrix u_y = ysvd.u;

  if (li == ki) {
    local.converged = true;
    if (diag) *diag = local;
    return u_y;
  }

  const Matrix x_unf = mode_unfold(x, i);
  const Index cols = x_unf.cols();
  const Index mi_full = pairs[0].cols();

  Rng rng(cfg.seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(i));
  Matrix a_var = random_matrix(rng, li * kr, cols);
  Matrix b_var = a_var;
  Matrix u_x = Matrix::Zero(mi_full, li - ki);
  Matrix mult = Matrix::Zero(li * kr, cols);
  double rho = cfg.rho0;

  std::vector<Matrix> p_uy(static_cast<size_t>(kr));
  for (Index r = 0; r < kr; ++r) p_uy[static_cast<size_t>(r)] = pairs[static_cast<size_t>(r)] * u_y;

  const auto block_y = [&](const Matrix& b, Index r) { return b.middleRows(r * li, ki); };
  const auto block_x = [&](const Matrix& b, Index r) {
    return b.middleRows(r * li + ki, li - ki);
  };

  int iter = 0;
  double change = 1e30;
  for (; iter < cfg.admm_max_iter; ++iter) {
    // residual after explaining X with the MSI-derived atoms
    Matrix x_tilde = x_unf;
    for (Index r = 0; r < kr; ++r) x_tilde.noalias() -= p_uy[static_cast<size_t>(r)] * block_y(b_var, r);

    Matrix rhs = Matrix::Zero(mi_full, li - ki);
    for (Index r = 0; r < kr; ++r)
      rhs.noalias() += pairs[static_cast<size_t>(r)].transpose() *
                       (x_tilde * block_x(b_var, r).transpose());

    const auto apply = [&](const Matrix& u) {
      Matrix w = Matrix::Zero(x_unf.rows(), cols);
      for (Index r = 0; r < kr; ++r)
        w.noalias() += (pairs[static_cast<size_t>(r)] * u) * block_x(b_var, r);
      Matrix out = Matrix::Zero(mi_full, li - ki);
      for (Index r = 0; r < kr; ++r)
        out.noalias() += pairs[static_cast<size_t>(r)].transpose() *
                         (w * block_x(b_var, r).transpose());
      return out;
    };

    const Matrix u_x_prev = u_x;
    CgResult cg = cg_solve(apply, rhs, u_x, cfg.cg_tol, cfg.cg_max_iter);
    if (!cg.converged) local.cg_trouble = true;
    u_x = cg.x;

    Matrix u_full(mi_full, li);
    u_full << u_y, u_x;
    Matrix d_mat(x_unf.rows(), li * kr);
    for (Index r = 0; r < kr; ++r)
      d_mat.middleCols(r * li, li).noalias() = pairs[static_cast<size_t>(r)] * u_full;

    Matrix gram = d_mat.transpose() * d_mat;
    gram.diagonal().array() += 0.5 * rho;
    const Eigen::LDLT<Matrix> ldlt(gram);
    b_var = ldlt.solve(d_mat.transpose() * x_unf + 0.5 * rho * (a_var + mult / rho));

    a_var = soft_threshold(b_var - mult / rho, cfg.mu / rho);
    mult += rho * (a_var - b_var);
    rho = std::min(cfg.nu * rho, cfg.rho_max);

    change = rel_change(u_x, u_x_prev);
    if (!u_x.allFinite()) {
      local.aborted = true;
      break;
    }
    if (change < cfg.eps) {
      local.converged = true;
      ++iter;
      break;
    }
  }
  local.iterations = iter;
  local.final_change = change;
  if (diag) *diag = local;

  Matrix u_full(mi_full, li);
  u_full << u_y, u_x;
  return u_full;
}

Matrix identify_spectral_subspace(const Tensor& x, Index c) {
  const Matrix x3 = mode_unfold(x, 3);
  if (c < 1 || c > std::min(x3.rows(), x3.cols()))
    throw std::invalid_argument("spectral rank out of range");
  return svd_truncate(x3, c).u;
}

Tensor sylvester_like_solve(const Tensor& h, const Matrix& q1, const Matrix& q2, const Matrix& q3,
                            const Tensor& k, double tau) {
  if (h.order() != 3 || k.order() != 3) throw std::invalid_argument("expected 3-order tensors");
  if (h.dim(0) != q1.rows() || h.dim(1) != q2.rows() || h.dim(2) != q3.rows() ||
      k.dim(0) != q1.cols() || k.dim(1) != q2.cols() || k.dim(2) != q3.cols())
    throw std::invalid_argument("factor shapes inconsistent with tensors");
  SylvesterCache cache(q1, q2, q3);
  return cache.solve_from_projection(project(h, q1, q2, q3), k, tau);
}

Tensor bgs_coding(const Tensor& x, const Tensor& y, const DegradationModel& model,
                  const Matrix& r_spec, const Matrix& u1, const Matrix& u2, const Matrix& u3,
                  const SolverConfig& cfg, RunHistory* history) {
  const Index kr = model.pair_count();
  if (kr == 0) throw std::invalid_argument("model has no factor pairs");
  const Index l1 = u1.cols(), l2 = u2.cols(), c = u3.cols();
  const std::vector<Index> core_dims{l1, l2, c};
  BlockShape bs{cfg.block};
  if (l1 % cfg.block[0] != 0 || l2 % cfg.block[1] != 0 || c % cfg.block[2] != 0)
    throw std::invalid_argument("block shape must divide the core extents");
  if (r_spec.cols() != u3.rows()) throw std::invalid_argument("spectral response shape mismatch");

  // Per-pair compressed factors and the MSI-side factors, with their
  // eigendecompositions fixed for the whole run.
  std::vector<Matrix> q1s, q2s;
  std::vector<SylvesterCache> caches;
  for (Index r = 0; r < kr; ++r) {
    q1s.push_back(model.p1[static_cast<size_t>(r)] * u1);
    q2s.push_back(model.p2[static_cast<size_t>(r)] * u2);
    caches.emplace_back(q1s.back(), q2s.back(), u3);
  }
  const Matrix ru3 = r_spec * u3;
  SylvesterCache y_cache(u1, u2, ru3);

  double gamma = cfg.gamma;
  if (gamma <= 0.0) {
    // Unregularized ridge estimate of the core from the MSI sets the scale.
    const double ridge = 1e-6 * std::max({y_cache.e1.maxCoeff() * y_cache.e2.maxCoeff() *
                                              y_cache.e3.maxCoeff(),
                                          kTiny});
    Tensor g0 = y_cache.solve_from_projection(project(y, u1, u2, ru3), Tensor(core_dims), ridge);
    Matrix g0b = b_unfold(g0, bs);
    std::vector<double> norms(static_cast<size_t>(g0b.cols()));
    for (Index j = 0; j < g0b.cols(); ++j) norms[static_cast<size_t>(j)] = g0b.col(j).norm();
    std::nth_element(norms.begin(), norms.begin() + norms.size() / 2, norms.end());
    gamma = 0.1 * norms[norms.size() / 2];
    if (gamma <= 0.0) gamma = 1.0;
  }

  Tensor g(core_dims);
  std::vector<Tensor> g_r(static_cast<size_t>(kr), Tensor(core_dims));
  std::vector<Tensor> fwd(static_cast<size_t>(kr), Tensor(x.dims()));
  Tensor p_x(x.dims()), p_y(y.dims());
  std::vector<Tensor> p_r(static_cast<size_t>(kr), Tensor(core_dims));
  Matrix ghat = Matrix::Zero(cfg.block[0] * cfg.block[1] * cfg.block[2],
                             (l1 / cfg.block[0]) * (l2 / cfg.block[1]) * (c / cfg.block[2]));
  Matrix w = ghat;
  double rho = cfg.rho0;

  StageDiagnostics diag;
  const double xnorm = std::max(frobenius_norm(x), kTiny);
  const double ynorm = std::max(frobenius_norm(y), kTiny);
  Tensor total_fwd(x.dims());

  int iter = 0;
  double change = 1e30;
  for (; iter < cfg.admm_max_iter; ++iter) {
    const Tensor g_prev = g;

    for (Index r = 0; r < kr; ++r) {
      auto& fr = fwd[static_cast<size_t>(r)];
      Tensor h = x + (1.0 / rho) * p_x - total_fwd + fr;
      Tensor k = g + (1.0 / rho) * p_r[static_cast<size_t>(r)];
      const auto& cache = caches[static_cast<size_t>(r)];
      Tensor solved = cache.solve_from_projection(
          project(h, q1s[static_cast<size_t>(r)], q2s[static_cast<size_t>(r)], u3), k, 1.0);
      total_fwd -= fr;
      fr = forward(solved, q1s[static_cast<size_t>(r)], q2s[static_cast<size_t>(r)], u3);
      total_fwd += fr;
      g_r[static_cast<size_t>(r)] = std::move(solved);
    }

    const Matrix g_bunf = b_unfold(g, bs);
    ProxInfo pinfo;
    ghat = prox_l2gamma(g_bunf - w / rho, rho, gamma, cfg.prox_tol, cfg.prox_max_iter, &pinfo);
    if (!pinfo.converged) diag.prox_trouble = true;

    const Tensor g_w = b_fold(ghat + w / rho, bs, core_dims);
    Tensor k_mean = g_w;
    for (Index r = 0; r < kr; ++r)
      k_mean += g_r[static_cast<size_t>(r)] - (1.0 / rho) * p_r[static_cast<size_t>(r)];
    k_mean = (1.0 / static_cast<double>(kr + 1)) * k_mean;
    const double tau = static_cast<double>(kr + 1);
    const Tensor h_y = y + (1.0 / rho) * p_y;
    g = y_cache.solve_from_projection(project(h_y, u1, u2, ru3), k_mean, tau);

    const Tensor x_resid = x - total_fwd;
    const Tensor y_fwd = forward(g, u1, u2, ru3);
    const Tensor y_resid = y - y_fwd;
    const Matrix g_bunf_new = b_unfold(g, bs);
    p_x += rho * x_resid;
    p_y += rho * y_resid;
    w += rho * (ghat - g_bunf_new);
    double consensus = 0.0;
    const double gnorm = std::max(frobenius_norm(g), kTiny);
    for (Index r = 0; r < kr; ++r) {
      const Tensor gap = g - g_r[static_cast<size_t>(r)];
      p_r[static_cast<size_t>(r)] += rho * gap;
      consensus = std::max(consensus, frobenius_norm(gap) / gnorm);
    }
    rho = std::min(cfg.nu * rho, cfg.rho_max);

    change = rel_change(g, g_prev);
    if (history) {
      IterationRecord rec;
      rec.iter = iter + 1;
      rec.rho = rho;
      rec.x_residual = frobenius_norm(x_resid) / xnorm;
      rec.y_residual = frobenius_norm(y_resid) / ynorm;
      rec.consensus = consensus;
      rec.bunfold_gap = (ghat - g_bunf_new).norm() / std::max(g_bunf_new.norm(), kTiny);
      rec.objective = l2gamma(ghat, gamma);
      rec.core_change = change;
      history->coding.push_back(rec);
    }
    if (!g.flat().allFinite()) {
      diag.aborted = true;
      break;
    }
    if (change < cfg.eps) {
      diag.converged = true;
      ++iter;
      break;
    }
  }
  diag.iterations = iter;
  diag.final_change = change;
  if (history) {
    history->coding_diag = diag;
    history->gamma_used = gamma;
  }
  return g;
}

FusionResult fuse(const Tensor& x, const Tensor& y, const DegradationModel& model,
                  const SolverConfig& cfg) {
  if (x.order() != 3 || y.order() != 3) throw std::invalid_argument("expected 3-order tensors");
  if (x.dim(2) != model.r_spec.cols() || y.dim(2) != model.r_spec.rows())
    throw std::invalid_argument("band counts inconsistent with the spectral response");

  DegradationModel working = model;
  if (cfg.kr_truncate) {
    const size_t keep = static_cast<size_t>(
        std::min<Index>(*cfg.kr_truncate, working.pair_count()));
    working.p1.resize(keep);
    working.p2.resize(keep);
  }

  SolverConfig rc = cfg.resolved(y.dim(0), y.dim(1), x.dim(2));

  FusionResult out;
  out.factors.u1 = identify_spatial_subspace(x, y, working, rc, 1, &out.history.subspace1);
  out.factors.u2 = identify_spatial_subspace(x, y, working, rc, 2, &out.history.subspace2);
  out.factors.u3 = identify_spectral_subspace(x, rc.c);
  out.factors.core = bgs_coding(x, y, working, model.r_spec, out.factors.u1, out.factors.u2,
                                out.factors.u3, rc, &out.history);
  out.sri_estimate = tucker_reconstruct(out.factors);
  out.converged = out.history.subspace1.converged && out.history.subspace2.converged &&
                  out.history.coding_diag.converged && !out.history.coding_diag.aborted;
  return out;
}

RecoverabilityReport check_recoverability(const TuckerFactors& factors,
                                          const DegradationModel& model, const Tensor& y,
                                          double tol) {
  const Index l1 = factors.u1.cols(), l2 = factors.u2.cols();
  const Index c = factors.u3.cols(), s_bands = factors.u3.rows();
  const Index kr = model.pair_count();
  if (kr == 0) throw std::invalid_argument("model has no factor pairs");

  RecoverabilityReport rep;
  const auto add = [&rep](std::string name, bool pass, double observed, double required,
                          bool structural = false) {
    rep.conditions.push_back({std::move(name), pass, structural, observed, required});
  };

  add("L1 <= L2*C", l1 <= l2 * c, static_cast<double>(l1), static_cast<double>(l2 * c));
  add("L2 <= L1*C", l2 <= l1 * c, static_cast<double>(l2), static_cast<double>(l1 * c));
  add("S >= 3", s_bands >= 3, static_cast<double>(s_bands), 3.0);

  for (int mode = 1; mode <= 2; ++mode) {
    const std::vector<Matrix>& pairs = (mode == 1) ? model.p1 : model.p2;
    const Matrix& u = (mode == 1) ? factors.u1 : factors.u2;
    const Index li = u.cols();
    const Index mi = pairs[0].rows();
    Matrix concat(mi, li * kr);
    for (Index r = 0; r < kr; ++r)
      concat.middleCols(r * li, li) = pairs[static_cast<size_t>(r)] * u;
    const Index required = li * kr;
    const bool structural = required > mi;
    const Index observed = numeric_rank(concat, tol);
    add("rank[P" + std::to_string(mode) + "^(r) U" + std::to_string(mode) + "] = L" +
            std::to_string(mode) + "*kr",
        observed == required, static_cast<double>(observed), static_cast<double>(required),
        structural);
  }

  for (int mode = 1; mode <= 2; ++mode) {
    const Index li = (mode == 1) ? l1 : l2;
    const Index observed = numeric_rank(mode_unfold(y, mode), tol);
    add("rank(Y_[" + std::to_string(mode) + "]) = L" + std::to_string(mode), observed == li,
        static_cast<double>(observed), static_cast<double>(li));
  }

  rep.all_pass = std::all_of(rep.conditions.begin(), rep.conditions.end(),
                             [](const ConditionVerdict& v) { return v.pass; });
  // The first five conditions are the separable-formulation impossibility
  // hypotheses: if they hold with more than one factor pair, no single-pair
  // model can recover the scene.
  const bool subset = rep.conditions[0].pass && rep.conditions[1].pass &&
                      rep.conditions[2].pass && rep.conditions[3].pass && rep.conditions[4].pass;
  rep.tf_fails_wp1 = subset && kr > 1;
  return rep;
}

}  // namespace gtfhsr
