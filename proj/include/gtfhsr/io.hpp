#pragma once

#include "gtfhsr/degradation.hpp"
#include "gtfhsr/metrics.hpp"
#include "gtfhsr/solver.hpp"
#include "gtfhsr/tensor.hpp"

#include <filesystem>
#include <string>

namespace gtfhsr {

/// Tensor container (.dtf): one UTF-8 JSON header line
/// {"dims":[...],"dtype":"f64","order":"col"} terminated by '\n', followed by
/// the raw little-endian 64-bit float payload in layout order.
void write_dtf(const std::filesystem::path& path, const Tensor& t);
Tensor read_dtf(const std::filesystem::path& path);

/// Matrices are stored as 2-order tensors.
void write_dtf(const std::filesystem::path& path, const Matrix& m);
Matrix read_dtf_matrix(const std::filesystem::path& path);

/// Degradation-model manifest: kernel parameters, downsampling, relative
/// paths of the factor-pair matrices, spectral response path and windows.
void write_model(const std::filesystem::path& dir, const DegradationModel& model,
                 const std::vector<std::pair<double, double>>& windows = {});
DegradationModel read_model(const std::filesystem::path& manifest_path);

std::string solver_config_to_json(const SolverConfig& cfg);
SolverConfig solver_config_from_json(const std::string& text);

void write_history(const std::filesystem::path& path, const RunHistory& history);

std::string metrics_to_json(const MetricsReport& rep);
void write_metrics(const std::filesystem::path& path, const MetricsReport& rep);
void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& rep);

void write_recoverability(const std::filesystem::path& path, const RecoverabilityReport& rep);

/// Spectrum (or any vector) as a two-column CSV with a header row.
void write_spectrum_csv(const std::filesystem::path& path, const Vector& values);

}  // namespace gtfhsr
