#pragma once

#include "gtfhsr/kronecker.hpp"
#include "gtfhsr/tensor.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gtfhsr {

struct KernelParams {
  enum class Kind { igk, agk, custom };
  Kind kind = Kind::custom;
  double sigma = 0.0;              // igk
  double theta = 0.0, a = 0.0, b = 0.0;  // agk
};

/// (2r+1) x (2r+1) spatial blur matrix, normalized to unit sum.
struct BlurKernel {
  int radius = 0;
  Matrix phi;
  KernelParams params;
};

/// Uniform downsampling by `factor` with per-axis phase offsets in [0, factor),
/// plus the 1-based convolution center shifts (defaulting to radius + 1,
/// i.e. a centered kernel).
struct DownsampleSpec {
  int factor = 1;
  int offset1 = 0, offset2 = 0;
  std::optional<int> shift1, shift2;

  int resolved_shift1(int radius) const { return shift1.value_or(radius + 1); }
  int resolved_shift2(int radius) const { return shift2.value_or(radius + 1); }
};

/// The spatial factor pairs {P1^(r), P2^(r)} of the degradation operator and
/// the spectral response R, together with the kernel/downsampling they were
/// built from.
struct DegradationModel {
  std::vector<Matrix> p1;  // m1 x M1
  std::vector<Matrix> p2;  // m2 x M2
  Matrix r_spec;           // s x S (may be empty when spatial-only)
  BlurKernel kernel;
  DownsampleSpec downsample;

  Index pair_count() const { return static_cast<Index>(p1.size()); }
};

/// Isotropic Gaussian kernel exp(-(i^2+j^2)/(2 sigma^2)) on {-r..r}^2,
/// normalized. Exactly rank 1 (an outer product of 1-D Gaussians).
BlurKernel make_igk(int radius, double sigma);

/// Anisotropic Gaussian kernel with precision matrix
/// Rot(theta) diag(a, b) Rot(theta)^T, normalized.
BlurKernel make_agk(int radius, double theta, double a, double b);

/// The four reference anisotropic kernels used throughout the analyses and
/// demos, indexed 1..4: theta = k*pi/16 and axis scales whose squares enter
/// the precision matrix, giving condition numbers from ~4e13 down to ~40.
BlurKernel reference_agk(int index);

/// Delta kernel (radius 0): pure downsampling.
BlurKernel make_delta();

/// Descending singular values of phi.
Vector kernel_spectrum(const BlurKernel& k);

/// Numeric rank of phi at rel_tol.
Index kernel_rank(const BlurKernel& k, double rel_tol = 1e-8);

/// Circulant matrix T = sum_l v[l] J_M^{M - shift + l} with l 1-based; J_M is
/// the basic circulant. Tz is the periodic correlation of z with v centered
/// per the shift.
Matrix build_circulant(const Vector& v, Index m_size, int shift);

/// m/d x m selection matrix keeping rows offset, offset+d, ...
Matrix build_selection(Index big, int factor, int offset);

/// Factor pairs P1^(r) = S1 T^{u_r}, P2^(r) = S2 T^{v_r} from the rank
/// decomposition of phi, with the term count chosen by `policy` applied to
/// phi's singular values. r_spec is left empty.
DegradationModel build_spatial_degradations(const BlurKernel& k, Index m1_full, Index m2_full,
                                            const DownsampleSpec& ds, const DecompPolicy& policy);

/// Dense D = sum_r (P2^(r) (x) P1^(r))^T, guarded to <= 1e8 entries.
Matrix build_dense_D(const DegradationModel& model);

/// sum_r z x1 P1^(r) x2 P2^(r): blur + downsample in factored form.
Tensor apply_spatial(const Tensor& z, const DegradationModel& model);

/// Bandwise periodic 2-D correlation with phi followed by uniform
/// downsampling; independent of the factored path.
Tensor apply_spatial_conv(const Tensor& z, const BlurKernel& k, const DownsampleSpec& ds);

/// Band-averaging spectral response: row j holds 1/n_j over the band centers
/// falling inside window j. Windows are [lo, hi) except the last, which is
/// closed at its upper edge.
Matrix make_band_average_response(const std::vector<double>& wavelengths,
                                  const std::vector<std::pair<double, double>>& windows);

/// Mode-3 product with the spectral response.
Tensor apply_spectral(const Tensor& z, const Matrix& r_spec);

struct SimulationResult {
  Tensor hsi;
  Tensor msi;
  DegradationModel model;
};

/// Forward-simulates the observation pair from an SRI. The HSI comes from the
/// convolution path; optional white Gaussian noise of standard deviation
/// noise_sigma is added to both observations (seeded, deterministic).
SimulationResult simulate_pair(const Tensor& sri, const BlurKernel& k, const DownsampleSpec& ds,
                               const Matrix& r_spec, const DecompPolicy& policy,
                               double noise_sigma = 0.0, std::uint64_t seed = 0);

}  // namespace gtfhsr
