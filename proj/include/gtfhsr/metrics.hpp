#pragma once

#include "gtfhsr/tensor.hpp"

#include <vector>

namespace gtfhsr {

/// Fusion quality indices. psnr_db saturates at 100 dB exactly when the
/// error is zero; sam_deg lies in [0, 180].
struct MetricsReport {
  double psnr_db = 0.0;
  double rmse = 0.0;  // on the 0..`scale` range
  double sam_deg = 0.0;
  double ssim = 0.0;
  double peak = 0.0;   // reference peak used for psnr/ssim
  double scale = 255;  // rmse range
  std::vector<double> per_band_psnr;
  std::vector<double> per_band_ssim;
};

inline constexpr double kPsnrCapDb = 100.0;

/// Mean over bands of 10 log10(peak^2 / MSE_band); zero-error bands
/// contribute the cap.
double psnr(const Tensor& ref, const Tensor& est, double peak);

/// Root mean square error after rescaling so the reference maximum maps to
/// `scale`.
double rmse(const Tensor& ref, const Tensor& est, double scale = 255.0);

/// Mean per-pixel spectral angle in degrees; pixels where either spectrum
/// has zero norm are skipped.
double sam(const Tensor& ref, const Tensor& est);

/// Bandwise SSIM with 8 x 8 uniform sliding windows (stride 1) and constants
/// C1 = (0.01 peak)^2, C2 = (0.03 peak)^2, averaged over windows then bands.
double ssim(const Tensor& ref, const Tensor& est, double peak);

/// Full report with peak taken from the reference maximum.
MetricsReport evaluate(const Tensor& ref, const Tensor& est, double scale = 255.0,
                       bool per_band = false);

}  // namespace gtfhsr
