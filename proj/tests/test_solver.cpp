#include <doctest.h>

#include "gtfhsr/pipeline.hpp"
#include "gtfhsr/solver.hpp"
#include "gtfhsr/synthetic.hpp"

#include <cmath>

using namespace gtfhsr;

namespace {

Tensor random_tensor(Rng& rng, std::vector<Index> dims) {
  Tensor t(dims);
  for (Index i = 0; i < t.size(); ++i) t.flat()(i) = rng.normal();
  return t;
}

Matrix orthonormal_cols(Rng& rng, Index rows, Index cols) {
  Matrix m = random_matrix(rng, rows, cols);
  return Eigen::HouseholderQR<Matrix>(m).householderQ() * Matrix::Identity(rows, cols);
}

// Gradient of the penalized least-squares objective at s.
Tensor sylvester_gradient(const Tensor& s, const Tensor& h, const Matrix& q1, const Matrix& q2,
                          const Matrix& q3, const Tensor& k, double tau) {
  Tensor fit = mode_product(mode_product(mode_product(s, q1.transpose() * q1, 1),
                                         q2.transpose() * q2, 2),
                            q3.transpose() * q3, 3);
  Tensor proj = mode_product(mode_product(mode_product(h, q1.transpose(), 1), q2.transpose(), 2),
                             q3.transpose(), 3);
  Tensor grad = fit - proj;
  grad += tau * (s - k);
  return Tensor(grad.dims(), 2.0 * grad.flat());
}

// Principal-angle residual: how much of span(u_true) is missed by span(u_est).
double span_residual(const Matrix& u_true, const Matrix& u_est) {
  Eigen::HouseholderQR<Matrix> qr(u_est);
  Matrix q = qr.householderQ() * Matrix::Identity(u_est.rows(), u_est.cols());
  Matrix proj = u_true - q * (q.transpose() * u_true);
  return proj.norm() / u_true.norm();
}

}  // namespace

TEST_CASE("cg solves identity and diagonal systems") {
  Rng rng(3);
  Matrix rhs = random_matrix(rng, 4, 3);
  CgResult ident = cg_solve([](const Matrix& v) { return v; }, rhs, Matrix::Zero(4, 3), 1e-12, 50);
  CHECK(ident.iterations <= 1);
  CHECK((ident.x - rhs).norm() < 1e-12 * rhs.norm());

  Vector d(5);
  d << 1, 2, 3, 4, 5;
  Matrix rhs5 = random_matrix(rng, 5, 2);
  CgResult diag = cg_solve([&](const Matrix& v) { return d.asDiagonal() * v; }, rhs5,
                           Matrix::Zero(5, 2), 1e-12, 100);
  Matrix direct = d.cwiseInverse().asDiagonal() * rhs5;
  CHECK((diag.x - direct).norm() < 1e-10 * direct.norm());
  CHECK(diag.converged);

  CgResult zero = cg_solve([](const Matrix& v) { return v; }, Matrix::Zero(3, 3),
                           Matrix::Ones(3, 3), 1e-12, 10);
  CHECK(zero.x.norm() == 0.0);
}

TEST_CASE("sylvester solve: scalar completion and penalty dominance") {
  Rng rng(5);
  Tensor h = random_tensor(rng, {3, 4, 2});
  Tensor k = random_tensor(rng, {3, 4, 2});
  Tensor s = sylvester_like_solve(h, Matrix::Identity(3, 3), Matrix::Identity(4, 4),
                                  Matrix::Identity(2, 2), k, 1.0);
  Tensor expected(h.dims(), 0.5 * (h.flat() + k.flat()));
  CHECK(rel_error(s, expected) < 1e-12);

  Tensor s_pen = sylvester_like_solve(h, random_matrix(rng, 3, 3), random_matrix(rng, 4, 4),
                                      random_matrix(rng, 2, 2), k, 1e6);
  CHECK(frobenius_norm(s_pen - k) <= 1e-4 * frobenius_norm(k));
}

TEST_CASE("sylvester solve recovers exactly at tau = 0 with orthonormal factors") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor s0 = random_tensor(rng, {3, 3, 2});
    Matrix q1 = orthonormal_cols(rng, 6, 3);
    Matrix q2 = orthonormal_cols(rng, 5, 3);
    Matrix q3 = orthonormal_cols(rng, 4, 2);
    Tensor h = mode_product(mode_product(mode_product(s0, q1, 1), q2, 2), q3, 3);
    Tensor s = sylvester_like_solve(h, q1, q2, q3, Tensor(s0.dims()), 0.0);
    CHECK(rel_error(s, s0) < 1e-10);
  }
}

TEST_CASE("sylvester solve satisfies stationarity") {
  Rng rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor h = random_tensor(rng, {5, 4, 3});
    Tensor k = random_tensor(rng, {3, 3, 2});
    Matrix q1 = random_matrix(rng, 5, 3);
    Matrix q2 = random_matrix(rng, 4, 3);
    Matrix q3 = random_matrix(rng, 3, 2);
    Tensor s = sylvester_like_solve(h, q1, q2, q3, k, 1.0);
    const double g_out = frobenius_norm(sylvester_gradient(s, h, q1, q2, q3, k, 1.0));
    const double g_at_k = frobenius_norm(sylvester_gradient(k, h, q1, q2, q3, k, 1.0));
    CHECK(g_out <= 1e-8 * g_at_k);
  }
  // tau = 0 with rank-deficient factors must be rejected
  Tensor h({2, 2, 2});
  CHECK_THROWS_AS(
      sylvester_like_solve(h, Matrix::Zero(2, 2), Matrix::Zero(2, 2), Matrix::Zero(2, 2),
                           Tensor({2, 2, 2}), 0.0),
      std::invalid_argument);
}

TEST_CASE("spectral subspace identification") {
  Rng rng(11);
  // spectral rank exactly 4
  TuckerFactors f;
  f.core = random_tensor(rng, {6, 6, 4});
  f.u1 = random_matrix(rng, 12, 6);
  f.u2 = random_matrix(rng, 12, 6);
  f.u3 = orthonormal_cols(rng, 9, 4);
  Tensor x = tucker_reconstruct(f);

  Matrix u3 = identify_spectral_subspace(x, 4);
  Matrix x3 = mode_unfold(x, 3);
  CHECK((u3 * (u3.transpose() * x3) - x3).norm() < 1e-10 * x3.norm());
  CHECK(span_residual(f.u3, u3) < 1e-8);

  Matrix full = identify_spectral_subspace(x, 9);
  CHECK((full.transpose() * full - Matrix::Identity(9, 9)).norm() < 1e-12);

  CHECK_THROWS_AS(identify_spectral_subspace(x, 10), std::invalid_argument);
}

TEST_CASE("blur leaves the spectral span intact") {
  Rng rng(13);
  TuckerFactors f;
  f.core = random_tensor(rng, {8, 8, 4});
  f.u1 = random_matrix(rng, 16, 8);
  f.u2 = random_matrix(rng, 16, 8);
  f.u3 = orthonormal_cols(rng, 8, 4);
  Tensor sri = tucker_reconstruct(f);
  DownsampleSpec ds;
  ds.factor = 2;
  Tensor hsi = apply_spatial_conv(sri, make_igk(2, 1.1), ds);
  Matrix u3 = identify_spectral_subspace(hsi, 4);
  CHECK(span_residual(f.u3, u3) < 1e-8);
}

TEST_CASE("spatial subspace: pure SVD path when no extra atoms are requested") {
  Rng rng(17);
  TuckerFactors f;
  f.core = random_tensor(rng, {5, 5, 4});
  f.u1 = random_matrix(rng, 16, 5);
  f.u2 = random_matrix(rng, 16, 5);
  f.u3 = random_matrix(rng, 8, 4);
  Tensor sri = tucker_reconstruct(f);
  Matrix r_spec = Matrix::Identity(8, 8).topRows(3);
  Tensor msi = apply_spectral(sri, r_spec);

  DownsampleSpec ds;
  ds.factor = 2;
  BlurKernel kernel = make_igk(2, 1.0);
  DegradationModel model = build_spatial_degradations(kernel, 16, 16, ds, ExactRank{1});
  Tensor hsi = apply_spatial_conv(sri, kernel, ds);

  SolverConfig cfg;
  cfg.l1 = cfg.l2 = 5;
  cfg.k1 = cfg.k2 = 5;
  cfg.c = 4;
  StageDiagnostics diag;
  Matrix u1 = identify_spatial_subspace(hsi, msi, model, cfg, 1, &diag);
  CHECK(diag.converged);
  CHECK(diag.iterations == 0);
  Matrix y1 = mode_unfold(msi, 1);
  CHECK((u1 * (u1.transpose() * y1) - y1).norm() <= 1e-8 * y1.norm());
}

TEST_CASE("spatial subspace: dictionary learning recovers the missing atoms") {
  Rng rng(19);
  TuckerFactors f;
  f.core = random_tensor(rng, {6, 6, 4});
  f.u1 = smooth_random_matrix(rng, 16, 6, 4);
  f.u2 = smooth_random_matrix(rng, 16, 6, 4);
  f.u3 = orthonormal_cols(rng, 8, 4);
  Tensor sri = tucker_reconstruct(f);
  Matrix r_spec = make_band_average_response({1, 2, 3, 4, 5, 6, 7, 8},
                                             {{1, 3}, {3, 5}, {5, 7}, {7, 8}});
  Tensor msi = apply_spectral(sri, r_spec);

  DownsampleSpec ds;
  ds.factor = 2;
  BlurKernel kernel = make_igk(2, 1.0);
  DegradationModel model = build_spatial_degradations(kernel, 16, 16, ds, ExactRank{1});
  Tensor hsi = apply_spatial_conv(sri, kernel, ds);

  SolverConfig cfg;
  cfg.l1 = cfg.l2 = 6;
  cfg.k1 = cfg.k2 = 5;
  cfg.c = 4;
  cfg.seed = 7;
  StageDiagnostics diag;
  Matrix u1 = identify_spatial_subspace(hsi, msi, model, cfg, 1, &diag);
  CHECK(u1.rows() == 16);
  CHECK(u1.cols() == 6);
  CHECK(span_residual(f.u1, u1) <= 0.05);

  // determinism: same seed, same factors bit for bit
  Matrix u1b = identify_spatial_subspace(hsi, msi, model, cfg, 1);
  CHECK((u1 - u1b).norm() == 0.0);
}

TEST_CASE("bgs coding maps zero data to a zero core") {
  DownsampleSpec ds;
  ds.factor = 2;
  DegradationModel model = build_spatial_degradations(make_igk(1, 1.0), 8, 8, ds, ExactRank{1});
  Matrix r_spec = Matrix::Identity(4, 4).topRows(2);
  Tensor x({4, 4, 4}), y({8, 8, 2});
  Matrix u1 = Matrix::Identity(8, 4), u2 = Matrix::Identity(8, 4),
         u3 = Matrix::Identity(4, 4);
  SolverConfig cfg;
  cfg.l1 = cfg.l2 = 4;
  cfg.c = 4;
  cfg.block = {2, 2, 2};
  cfg.gamma = 1.0;
  Tensor g = bgs_coding(x, y, model, r_spec, u1, u2, u3, cfg);
  CHECK(frobenius_norm(g) == 0.0);
}

TEST_CASE("bgs coding reaches data consistency on noise-free scenes") {
  Rng rng(23);
  Tensor sri = make_synthetic_sri(16, 16, 8, 8, 8, 4, 5);
  Matrix r_spec = make_band_average_response(synthetic_band_centers(8), quarter_windows());
  DownsampleSpec ds;
  ds.factor = 2;
  BlurKernel kernel = make_igk(2, 1.0);
  SimulationResult sim = simulate_pair(sri, kernel, ds, r_spec, Energy{0.9999});
  REQUIRE(sim.model.pair_count() == 1);

  SolverConfig cfg;
  cfg.l1 = cfg.l2 = 16;
  cfg.k1 = cfg.k2 = 15;
  cfg.c = 8;
  cfg.block = {4, 4, 2};
  cfg.gamma = 1e6;  // prior effectively inactive
  cfg.nu = 1.1;
  cfg.admm_max_iter = 200;
  cfg.seed = 3;

  Matrix u1 = identify_spatial_subspace(sim.hsi, sim.msi, sim.model, cfg, 1);
  Matrix u2 = identify_spatial_subspace(sim.hsi, sim.msi, sim.model, cfg, 2);
  Matrix u3 = identify_spectral_subspace(sim.hsi, cfg.c);

  RunHistory hist;
  Tensor g = bgs_coding(sim.hsi, sim.msi, sim.model, r_spec, u1, u2, u3, cfg, &hist);
  REQUIRE(!hist.coding.empty());
  const auto& last = hist.coding.back();
  CHECK(last.x_residual <= 1e-3);
  CHECK(last.y_residual <= 1e-3);

  // determinism
  Tensor g2 = bgs_coding(sim.hsi, sim.msi, sim.model, r_spec, u1, u2, u3, cfg);
  CHECK((g.flat() - g2.flat()).norm() == 0.0);

  // soft monotone-trend check on the combined residual (not a hard gate)
  const auto combined = [&](size_t i) {
    return hist.coding[i].x_residual + hist.coding[i].y_residual + hist.coding[i].consensus;
  };
  for (size_t k = 5; 10 * k < hist.coding.size(); ++k) {
    WARN_MESSAGE(combined(10 * k - 1) <= combined(k - 1),
                 "combined residual not decreasing tenfold between iterations ",
                 k, " and ", 10 * k);
  }
}

TEST_CASE("fuse recovers the scene under identity degradation") {
  Tensor sri = make_synthetic_sri(16, 16, 8, 8, 8, 4, 11);
  DownsampleSpec unit;
  SimulationResult sim =
      simulate_pair(sri, make_delta(), unit, Matrix::Identity(8, 8), ExactRank{1});

  SolverConfig cfg;
  cfg.c = 8;
  cfg.block = {4, 4, 2};
  cfg.gamma = 1e6;
  cfg.nu = 1.1;
  cfg.admm_max_iter = 200;
  cfg.seed = 1;
  FusionResult result = fuse(sim.hsi, sim.msi, sim.model, cfg);
  CHECK(rel_error(result.sri_estimate, sim.hsi) <= 1e-3);
  CHECK(rel_error(result.sri_estimate, tucker_reconstruct(result.factors)) < 1e-12);
}

TEST_CASE("kr_truncate on a single-pair model is a no-op bit for bit") {
  Tensor sri = make_synthetic_sri(16, 16, 8, 8, 8, 4, 13);
  Matrix r_spec = make_band_average_response(synthetic_band_centers(8), quarter_windows());
  DownsampleSpec ds;
  ds.factor = 2;
  SimulationResult sim = simulate_pair(sri, make_igk(2, 1.0), ds, r_spec, Energy{0.9999});
  REQUIRE(sim.model.pair_count() == 1);

  SolverConfig cfg;
  cfg.c = 8;
  cfg.block = {4, 4, 2};
  cfg.admm_max_iter = 40;
  cfg.seed = 2;
  FusionResult full = fuse(sim.hsi, sim.msi, sim.model, cfg);
  SolverConfig trunc = cfg;
  trunc.kr_truncate = 1;
  FusionResult one = fuse(sim.hsi, sim.msi, sim.model, trunc);
  CHECK((full.sri_estimate.flat() - one.sri_estimate.flat()).norm() == 0.0);
}

TEST_CASE("recoverability checker on the three constructed cases") {
  Rng rng(29);

  // generic pass: kr = 1, modest ranks, plenty of pixels
  {
    TuckerFactors f;
    f.core = random_tensor(rng, {4, 4, 3});
    f.u1 = random_matrix(rng, 16, 4);
    f.u2 = random_matrix(rng, 16, 4);
    f.u3 = random_matrix(rng, 8, 3);
    Tensor z = tucker_reconstruct(f);
    Matrix r_spec = Matrix::Identity(8, 8).topRows(4);
    Tensor y = apply_spectral(z, r_spec);
    DownsampleSpec ds;
    ds.factor = 2;
    DegradationModel model = build_spatial_degradations(make_igk(2, 1.0), 16, 16, ds, ExactRank{1});
    RecoverabilityReport rep = check_recoverability(f, model, y);
    CHECK(rep.all_pass);
    CHECK(!rep.tf_fails_wp1);
    for (const auto& c : rep.conditions) CHECK(c.pass);
  }

  // L1 > L2*C fails the first inequality
  {
    TuckerFactors f;
    f.core = random_tensor(rng, {8, 2, 3});
    f.u1 = random_matrix(rng, 16, 8);
    f.u2 = random_matrix(rng, 16, 2);
    f.u3 = random_matrix(rng, 8, 3);
    Tensor z = tucker_reconstruct(f);
    Tensor y = apply_spectral(z, Matrix::Identity(8, 8).topRows(4));
    DownsampleSpec ds;
    ds.factor = 2;
    DegradationModel model = build_spatial_degradations(make_igk(2, 1.0), 16, 16, ds, ExactRank{1});
    RecoverabilityReport rep = check_recoverability(f, model, y);
    CHECK(!rep.conditions[0].pass);  // 8 > 2*3
    CHECK(!rep.all_pass);
  }

  // dimension-forced concatenation failure: kr = 2 with L_i * 2 > m_i
  {
    Rng krng(31);
    Matrix phi = Matrix::Zero(5, 5);
    for (int r = 0; r < 2; ++r) {
      Vector u(5), v(5);
      for (Index i = 0; i < 5; ++i) {
        u(i) = krng.uniform(0.1, 1.0);
        v(i) = krng.uniform(0.1, 1.0);
      }
      phi += u * v.transpose();
    }
    BlurKernel k2;
    k2.radius = 2;
    k2.phi = phi / phi.sum();
    DownsampleSpec ds;
    ds.factor = 4;
    DegradationModel model = build_spatial_degradations(k2, 16, 16, ds, ExactRank{2});

    TuckerFactors f;
    f.core = random_tensor(rng, {3, 3, 3});
    f.u1 = random_matrix(rng, 16, 3);
    f.u2 = random_matrix(rng, 16, 3);
    f.u3 = random_matrix(rng, 8, 3);
    Tensor z = tucker_reconstruct(f);
    Tensor y = apply_spectral(z, Matrix::Identity(8, 8).topRows(4));
    RecoverabilityReport rep = check_recoverability(f, model, y);
    // L_i * kr = 6 > m_i = 4: structurally impossible
    CHECK(!rep.conditions[3].pass);
    CHECK(rep.conditions[3].structural);
    CHECK(!rep.conditions[4].pass);
  }

  // S = 2 fails the band-count requirement
  {
    TuckerFactors f;
    f.core = random_tensor(rng, {3, 3, 2});
    f.u1 = random_matrix(rng, 16, 3);
    f.u2 = random_matrix(rng, 16, 3);
    f.u3 = random_matrix(rng, 2, 2);
    Tensor z = tucker_reconstruct(f);
    Tensor y = apply_spectral(z, Matrix::Identity(2, 2).topRows(1));
    DownsampleSpec ds;
    ds.factor = 2;
    DegradationModel model = build_spatial_degradations(make_igk(2, 1.0), 16, 16, ds, ExactRank{1});
    RecoverabilityReport rep = check_recoverability(f, model, y);
    CHECK(!rep.conditions[2].pass);
  }
}

TEST_CASE("separable-formulation impossibility flag requires multiple pairs") {
  Rng rng(37);
  // kr = 2 with generous pixel counts so the rank conditions hold
  Matrix phi = Matrix::Zero(3, 3);
  for (int r = 0; r < 2; ++r) {
    Vector u(3), v(3);
    for (Index i = 0; i < 3; ++i) {
      u(i) = rng.uniform(0.1, 1.0);
      v(i) = rng.uniform(0.1, 1.0);
    }
    phi += u * v.transpose();
  }
  BlurKernel k2;
  k2.radius = 1;
  k2.phi = phi / phi.sum();
  DownsampleSpec ds;
  ds.factor = 2;
  DegradationModel model = build_spatial_degradations(k2, 24, 24, ds, ExactRank{2});

  TuckerFactors f;
  f.core = random_tensor(rng, {4, 4, 3});
  f.u1 = random_matrix(rng, 24, 4);
  f.u2 = random_matrix(rng, 24, 4);
  f.u3 = random_matrix(rng, 8, 3);
  Tensor z = tucker_reconstruct(f);
  Tensor y = apply_spectral(z, Matrix::Identity(8, 8).topRows(4));
  RecoverabilityReport rep = check_recoverability(f, model, y);
  CHECK(rep.conditions[3].pass);
  CHECK(rep.conditions[4].pass);
  CHECK(rep.tf_fails_wp1);
}

TEST_CASE("solver configuration validation") {
  SolverConfig cfg;
  cfg.nu = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SolverConfig{};
  cfg.block = {4, 4};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SolverConfig{};
  cfg.kr_truncate = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = SolverConfig{};
  SolverConfig r = cfg.resolved(64, 64, 16);
  CHECK(r.l1 == 64);
  CHECK(r.k1 == 60);
  CHECK_THROWS_AS(cfg.resolved(8, 8, 8), std::invalid_argument);  // c=12 > 8 bands
}
