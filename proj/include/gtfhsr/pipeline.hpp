#pragma once

#include "gtfhsr/degradation.hpp"
#include "gtfhsr/io.hpp"
#include "gtfhsr/metrics.hpp"
#include "gtfhsr/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gtfhsr {

/// The six Landsat7-style band-averaging windows (nm).
std::vector<std::pair<double, double>> landsat7_windows();

/// Band centers of the 162-band urban scene grid: 400..2490 nm at 10 nm,
/// with the water-absorption bands removed.
std::vector<double> urban_band_centers();

/// Evenly spaced synthetic band centers over 400..2350 nm.
std::vector<double> synthetic_band_centers(Index bands);

/// Four equal-width windows spanning the synthetic band range.
std::vector<std::pair<double, double>> quarter_windows();

/// Resolve a kernel name: "igk" (9x9, sigma 3.3973), "agk1".."agk4"
/// (the reference anisotropic kernels), or "delta".
BlurKernel kernel_by_name(const std::string& name);

struct DemoOptions {
  std::uint64_t seed = 7;
  std::string kernel = "agk3";
  int factor = 4;
  std::filesystem::path out_dir;
  SolverConfig solver;  // l/k/c resolved against the 64x64x16 scene
};

struct DemoResult {
  MetricsReport full;
  MetricsReport truncated;
  double psnr_gap = 0.0;  // full minus single-pair emulation
  bool converged = false;
};

/// End-to-end seeded run on a 64x64x16 synthetic scene: kernel analysis,
/// simulation, fusion with the full factor-pair list and with the list
/// truncated to one pair, evaluation of both, and a comparison CSV. Writes
/// every artifact under out_dir; byte-identical across runs with the same
/// options.
DemoResult run_demo(const DemoOptions& opts);

}  // namespace gtfhsr
