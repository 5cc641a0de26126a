#include "gtfhsr/io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace gtfhsr {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_header_and_payload(std::ofstream& out, const std::vector<Index>& dims,
                              const double* data, Index count) {
  json header;
  header["dims"] = dims;
  header["dtype"] = "f64";
  header["order"] = "col";
  out << header.dump() << '\n';
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count) * 8);
  if (!out) throw std::runtime_error("failed writing tensor payload");
}

std::pair<std::vector<Index>, Vector> read_payload(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("missing container header");
  const json header = json::parse(line);
  if (header.at("dtype") != "f64" || header.at("order") != "col")
    throw std::runtime_error("unsupported container encoding");
  std::vector<Index> dims = header.at("dims").get<std::vector<Index>>();
  Index count = 1;
  for (Index d : dims) count *= d;
  Vector data(count);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count) * 8);
  if (in.gcount() != static_cast<std::streamsize>(count) * 8)
    throw std::runtime_error("truncated tensor payload in " + path.string());
  return {std::move(dims), std::move(data)};
}

json kernel_to_json(const BlurKernel& k, const std::string& phi_path) {
  json j;
  switch (k.params.kind) {
    case KernelParams::Kind::igk:
      j["kind"] = "igk";
      j["params"] = {{"sigma", k.params.sigma}};
      break;
    case KernelParams::Kind::agk:
      j["kind"] = "agk";
      j["params"] = {{"theta", k.params.theta}, {"a", k.params.a}, {"b", k.params.b}};
      break;
    case KernelParams::Kind::custom:
      j["kind"] = "custom";
      j["params"] = json::object();
      break;
  }
  j["radius"] = k.radius;
  j["phi"] = phi_path;
  return j;
}

}  // namespace

void write_dtf(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_header_and_payload(out, t.dims(), t.data(), t.size());
}

Tensor read_dtf(const std::filesystem::path& path) {
  auto [dims, data] = read_payload(path);
  return Tensor(std::move(dims), std::move(data));
}

void write_dtf(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_header_and_payload(out, {m.rows(), m.cols()}, m.data(), m.size());
}

Matrix read_dtf_matrix(const std::filesystem::path& path) {
  auto [dims, data] = read_payload(path);
  if (dims.size() != 2) throw std::runtime_error("expected a 2-order container");
  return unvec(data, dims[0], dims[1]);
}

void write_model(const std::filesystem::path& dir, const DegradationModel& model,
                 const std::vector<std::pair<double, double>>& windows) {
  std::filesystem::create_directories(dir);
  json manifest;
  write_dtf(dir / "kernel.dtf",
            Tensor({model.kernel.phi.rows(), model.kernel.phi.cols()}, vec(model.kernel.phi)));
  manifest["kernel"] = kernel_to_json(model.kernel, "kernel.dtf");
  manifest["downsample"] = {
      {"factor", model.downsample.factor},
      {"offsets", {model.downsample.offset1, model.downsample.offset2}},
      {"shift",
       {model.downsample.resolved_shift1(model.kernel.radius),
        model.downsample.resolved_shift2(model.kernel.radius)}}};
  json pairs = json::array();
  for (Index r = 0; r < model.pair_count(); ++r) {
    const std::string p1 = "pair" + std::to_string(r) + "_p1.dtf";
    const std::string p2 = "pair" + std::to_string(r) + "_p2.dtf";
    write_dtf(dir / p1, model.p1[static_cast<size_t>(r)]);
    write_dtf(dir / p2, model.p2[static_cast<size_t>(r)]);
    pairs.push_back({p1, p2});
  }
  manifest["pairs"] = pairs;
  json spectral;
  json win = json::array();
  for (const auto& [lo, hi] : windows) win.push_back({lo, hi});
  spectral["windows"] = win;
  if (model.r_spec.size() > 0) {
    write_dtf(dir / "r_spec.dtf", model.r_spec);
    spectral["response"] = "r_spec.dtf";
  }
  manifest["spectral"] = spectral;
  std::ofstream out(dir / "model.json");
  out << manifest.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing model manifest");
}

DegradationModel read_model(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open " + manifest_path.string());
  const json manifest = json::parse(in);
  const auto dir = manifest_path.parent_path();

  DegradationModel model;
  const json& kj = manifest.at("kernel");
  const std::string kind = kj.at("kind");
  model.kernel.radius = kj.at("radius");
  model.kernel.phi = read_dtf_matrix(dir / kj.at("phi").get<std::string>());
  if (kind == "igk") {
    model.kernel.params.kind = KernelParams::Kind::igk;
    model.kernel.params.sigma = kj.at("params").at("sigma");
  } else if (kind == "agk") {
    model.kernel.params.kind = KernelParams::Kind::agk;
    model.kernel.params.theta = kj.at("params").at("theta");
    model.kernel.params.a = kj.at("params").at("a");
    model.kernel.params.b = kj.at("params").at("b");
  } else {
    model.kernel.params.kind = KernelParams::Kind::custom;
  }

  const json& dj = manifest.at("downsample");
  model.downsample.factor = dj.at("factor");
  model.downsample.offset1 = dj.at("offsets")[0];
  model.downsample.offset2 = dj.at("offsets")[1];
  model.downsample.shift1 = dj.at("shift")[0].get<int>();
  model.downsample.shift2 = dj.at("shift")[1].get<int>();

  for (const auto& pair : manifest.at("pairs")) {
    model.p1.push_back(read_dtf_matrix(dir / pair[0].get<std::string>()));
    model.p2.push_back(read_dtf_matrix(dir / pair[1].get<std::string>()));
  }
  if (manifest.at("spectral").contains("response"))
    model.r_spec = read_dtf_matrix(dir / manifest.at("spectral").at("response").get<std::string>());
  return model;
}

std::string solver_config_to_json(const SolverConfig& cfg) {
  json j;
  j["l1"] = cfg.l1;
  j["l2"] = cfg.l2;
  j["c"] = cfg.c;
  j["k1"] = cfg.k1;
  j["k2"] = cfg.k2;
  j["block"] = cfg.block;
  j["gamma"] = cfg.gamma;
  j["mu"] = cfg.mu;
  j["rho0"] = cfg.rho0;
  j["rho_max"] = cfg.rho_max;
  j["nu"] = cfg.nu;
  j["eps"] = cfg.eps;
  j["admm_max_iter"] = cfg.admm_max_iter;
  j["cg_tol"] = cfg.cg_tol;
  j["cg_max_iter"] = cfg.cg_max_iter;
  j["prox_tol"] = cfg.prox_tol;
  j["prox_max_iter"] = cfg.prox_max_iter;
  j["seed"] = cfg.seed;
  if (cfg.kr_truncate)
    j["kr_truncate"] = *cfg.kr_truncate;
  else
    j["kr_truncate"] = nullptr;
  j["lambda"] = cfg.lambda;  // accepted for interface parity; no update uses it
  return j.dump(2);
}

SolverConfig solver_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  SolverConfig cfg;
  cfg.l1 = j.value("l1", cfg.l1);
  cfg.l2 = j.value("l2", cfg.l2);
  cfg.c = j.value("c", cfg.c);
  cfg.k1 = j.value("k1", cfg.k1);
  cfg.k2 = j.value("k2", cfg.k2);
  if (j.contains("block")) cfg.block = j.at("block").get<std::vector<Index>>();
  cfg.gamma = j.value("gamma", cfg.gamma);
  cfg.mu = j.value("mu", cfg.mu);
  cfg.rho0 = j.value("rho0", cfg.rho0);
  cfg.rho_max = j.value("rho_max", cfg.rho_max);
  cfg.nu = j.value("nu", cfg.nu);
  cfg.eps = j.value("eps", cfg.eps);
  cfg.admm_max_iter = j.value("admm_max_iter", cfg.admm_max_iter);
  cfg.cg_tol = j.value("cg_tol", cfg.cg_tol);
  cfg.cg_max_iter = j.value("cg_max_iter", cfg.cg_max_iter);
  cfg.prox_tol = j.value("prox_tol", cfg.prox_tol);
  cfg.prox_max_iter = j.value("prox_max_iter", cfg.prox_max_iter);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("kr_truncate") && !j.at("kr_truncate").is_null())
    cfg.kr_truncate = j.at("kr_truncate").get<Index>();
  cfg.lambda = j.value("lambda", cfg.lambda);
  return cfg;
}

void write_history(const std::filesystem::path& path, const RunHistory& history) {
  json j;
  const auto diag_json = [](const StageDiagnostics& d) {
    return json{{"iterations", d.iterations},   {"final_change", d.final_change},
                {"converged", d.converged},     {"cg_trouble", d.cg_trouble},
                {"prox_trouble", d.prox_trouble}, {"rank_warning", d.rank_warning},
                {"aborted", d.aborted}};
  };
  j["subspace1"] = diag_json(history.subspace1);
  j["subspace2"] = diag_json(history.subspace2);
  j["coding"] = diag_json(history.coding_diag);
  j["gamma_used"] = history.gamma_used;
  json iters = json::array();
  for (const auto& rec : history.coding) {
    iters.push_back({{"iter", rec.iter},
                     {"rho", rec.rho},
                     {"x_residual", rec.x_residual},
                     {"y_residual", rec.y_residual},
                     {"consensus", rec.consensus},
                     {"bunfold_gap", rec.bunfold_gap},
                     {"objective", rec.objective},
                     {"core_change", rec.core_change}});
  }
  j["iterations"] = iters;
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing history");
}

std::string metrics_to_json(const MetricsReport& rep) {
  json j;
  j["psnr_db"] = rep.psnr_db;
  j["rmse"] = rep.rmse;
  j["sam_deg"] = rep.sam_deg;
  j["ssim"] = rep.ssim;
  j["peak"] = rep.peak;
  j["scale"] = rep.scale;
  j["definitions"] = {
      {"psnr", "mean over bands of 10 log10(peak^2 / band MSE); zero-error bands contribute "
               "100 dB; peak = reference maximum"},
      {"rmse", "RMSE after rescaling the reference maximum to `scale`"},
      {"sam", "mean per-pixel spectral angle in degrees; zero-norm pixels skipped"},
      {"ssim", "bandwise 8x8 uniform sliding windows, stride 1, C1=(0.01 peak)^2, "
               "C2=(0.03 peak)^2"}};
  if (!rep.per_band_psnr.empty()) {
    j["per_band_psnr"] = rep.per_band_psnr;
    j["per_band_ssim"] = rep.per_band_ssim;
  }
  return j.dump(2);
}

void write_metrics(const std::filesystem::path& path, const MetricsReport& rep) {
  std::ofstream out(path);
  out << metrics_to_json(rep) << '\n';
  if (!out) throw std::runtime_error("failed writing metrics");
}

void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& rep) {
  std::ofstream out(path);
  out << "psnr_db,rmse,sam_deg,ssim,peak,scale\n";
  out << fmt(rep.psnr_db) << ',' << fmt(rep.rmse) << ',' << fmt(rep.sam_deg) << ','
      << fmt(rep.ssim) << ',' << fmt(rep.peak) << ',' << fmt(rep.scale) << '\n';
  if (!out) throw std::runtime_error("failed writing metrics CSV");
}

void write_recoverability(const std::filesystem::path& path, const RecoverabilityReport& rep) {
  json j;
  json conds = json::array();
  for (const auto& c : rep.conditions) {
    conds.push_back({{"name", c.name},
                     {"pass", c.pass},
                     {"structural", c.structural},
                     {"observed", c.observed},
                     {"required", c.required}});
  }
  j["conditions"] = conds;
  j["all_pass"] = rep.all_pass;
  j["tf_fails_wp1"] = rep.tf_fails_wp1;
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing recoverability report");
}

void write_spectrum_csv(const std::filesystem::path& path, const Vector& values) {
  std::ofstream out(path);
  out << "index,singular_value\n";
  for (Index i = 0; i < values.size(); ++i) out << i + 1 << ',' << fmt(values(i)) << '\n';
  if (!out) throw std::runtime_error("failed writing spectrum CSV");
}

}  // namespace gtfhsr
