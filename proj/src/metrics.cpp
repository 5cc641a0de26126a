#include "gtfhsr/metrics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gtfhsr {

namespace {

void check_pair(const Tensor& ref, const Tensor& est) {
  if (!ref.same_shape(est)) throw std::invalid_argument("shape mismatch");
  if (ref.order() != 3) throw std::invalid_argument("expected 3-order tensors");
}

double band_psnr(const Tensor& ref, const Tensor& est, Index band, double peak) {
  const Index plane = ref.dim(0) * ref.dim(1);
  Eigen::Map<const Vector> r(ref.data() + band * plane, plane);
  Eigen::Map<const Vector> e(est.data() + band * plane, plane);
  const double mse = (r - e).squaredNorm() / static_cast<double>(plane);
  if (mse == 0.0) return kPsnrCapDb;
  return 10.0 * std::log10(peak * peak / mse);
}

double band_ssim(const Tensor& ref, const Tensor& est, Index band, double c1, double c2) {
  const Index m1 = ref.dim(0), m2 = ref.dim(1);
  constexpr Index w = 8;
  if (m1 < w || m2 < w) throw std::invalid_argument("image smaller than the SSIM window");
  const double* rp = ref.data() + band * m1 * m2;
  const double* ep = est.data() + band * m1 * m2;
  const double n = static_cast<double>(w * w);
  double acc = 0.0;
  Index windows = 0;
  for (Index q = 0; q + w <= m2; ++q) {
    for (Index p = 0; p + w <= m1; ++p) {
      double sr = 0, se = 0, srr = 0, see = 0, sre = 0;
      for (Index j = 0; j < w; ++j) {
        const double* rc = rp + p + (q + j) * m1;
        const double* ec = ep + p + (q + j) * m1;
        for (Index i = 0; i < w; ++i) {
          const double a = rc[i], b = ec[i];
          sr += a;
          se += b;
          srr += a * a;
          see += b * b;
          sre += a * b;
        }
      }
      const double mr = sr / n, me = se / n;
      const double vr = srr / n - mr * mr;
      const double ve = see / n - me * me;
      const double cov = sre / n - mr * me;
      acc += ((2.0 * mr * me + c1) * (2.0 * cov + c2)) /
             ((mr * mr + me * me + c1) * (vr + ve + c2));
      ++windows;
    }
  }
  return acc / static_cast<double>(windows);
}

}  // namespace

double psnr(const Tensor& ref, const Tensor& est, double peak) {
  check_pair(ref, est);
  if (peak <= 0.0) throw std::invalid_argument("peak must be positive");
  double acc = 0.0;
  for (Index band = 0; band < ref.dim(2); ++band) acc += band_psnr(ref, est, band, peak);
  return acc / static_cast<double>(ref.dim(2));
}

double rmse(const Tensor& ref, const Tensor& est, double scale) {
  check_pair(ref, est);
  const double peak = ref.flat().maxCoeff();
  if (peak <= 0.0) throw std::invalid_argument("reference maximum must be positive for rescaling");
  const double factor = scale / peak;
  return factor * std::sqrt((ref.flat() - est.flat()).squaredNorm() /
                            static_cast<double>(ref.size()));
}

double sam(const Tensor& ref, const Tensor& est) {
  check_pair(ref, est);
  const Index plane = ref.dim(0) * ref.dim(1), bands = ref.dim(2);
  double acc = 0.0;
  Index used = 0;
  for (Index p = 0; p < plane; ++p) {
    Eigen::Map<const Vector, 0, Eigen::InnerStride<>> r(ref.data() + p, bands,
                                                        Eigen::InnerStride<>(plane));
    Eigen::Map<const Vector, 0, Eigen::InnerStride<>> e(est.data() + p, bands,
                                                        Eigen::InnerStride<>(plane));
    const double nr = r.norm(), ne = e.norm();
    if (nr == 0.0 || ne == 0.0) continue;
    const double cosang = std::clamp(r.dot(e) / (nr * ne), -1.0, 1.0);
    acc += std::acos(cosang);
    ++used;
  }
  if (used == 0) throw std::invalid_argument("all pixels have zero spectral norm");
  return acc / static_cast<double>(used) * 180.0 / std::numbers::pi;
}

double ssim(const Tensor& ref, const Tensor& est, double peak) {
  check_pair(ref, est);
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  double acc = 0.0;
  for (Index band = 0; band < ref.dim(2); ++band) acc += band_ssim(ref, est, band, c1, c2);
  return acc / static_cast<double>(ref.dim(2));
}

MetricsReport evaluate(const Tensor& ref, const Tensor& est, double scale, bool per_band) {
  check_pair(ref, est);
  MetricsReport rep;
  rep.peak = ref.flat().maxCoeff();
  rep.scale = scale;
  rep.psnr_db = psnr(ref, est, rep.peak);
  rep.rmse = rmse(ref, est, scale);
  rep.sam_deg = sam(ref, est);
  rep.ssim = ssim(ref, est, rep.peak);
  if (per_band) {
    const double c1 = (0.01 * rep.peak) * (0.01 * rep.peak);
    const double c2 = (0.03 * rep.peak) * (0.03 * rep.peak);
    for (Index band = 0; band < ref.dim(2); ++band) {
      rep.per_band_psnr.push_back(band_psnr(ref, est, band, rep.peak));
      rep.per_band_ssim.push_back(band_ssim(ref, est, band, c1, c2));
    }
  }
  return rep;
}

}  // namespace gtfhsr
