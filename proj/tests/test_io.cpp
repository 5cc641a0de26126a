#include <doctest.h>

#include "gtfhsr/io.hpp"
#include "gtfhsr/pipeline.hpp"
#include "gtfhsr/synthetic.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace gtfhsr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("gtfhsr_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

}  // namespace

TEST_CASE("tensor container roundtrip is bit-exact") {
  TempDir dir;
  Rng rng(3);
  Tensor t({3, 4, 2});
  for (Index i = 0; i < t.size(); ++i) t.flat()(i) = rng.normal();
  const fs::path file = dir.path / "t.dtf";
  write_dtf(file, t);
  Tensor back = read_dtf(file);
  CHECK(back.dims() == t.dims());
  CHECK((back.flat() - t.flat()).norm() == 0.0);

  // header is one JSON line
  std::ifstream in(file, std::ios::binary);
  std::string header;
  std::getline(in, header);
  const auto j = nlohmann::json::parse(header);
  CHECK(j["dtype"] == "f64");
  CHECK(j["order"] == "col");
  CHECK(j["dims"] == std::vector<Index>{3, 4, 2});
}

TEST_CASE("matrix container roundtrip") {
  TempDir dir;
  Rng rng(5);
  Matrix m = random_matrix(rng, 4, 6);
  write_dtf(dir.path / "m.dtf", m);
  Matrix back = read_dtf_matrix(dir.path / "m.dtf");
  CHECK((back - m).norm() == 0.0);
  CHECK_THROWS_AS(read_dtf(dir.path / "missing.dtf"), std::runtime_error);
}

TEST_CASE("model manifest roundtrip") {
  TempDir dir;
  DownsampleSpec ds;
  ds.factor = 2;
  ds.offset1 = 1;
  DegradationModel model =
      build_spatial_degradations(reference_agk(3), 16, 16, ds, Energy{0.9999});
  model.r_spec = make_band_average_response(synthetic_band_centers(8), quarter_windows());
  write_model(dir.path / "model", model, quarter_windows());

  DegradationModel back = read_model(dir.path / "model" / "model.json");
  REQUIRE(back.pair_count() == model.pair_count());
  for (Index r = 0; r < model.pair_count(); ++r) {
    CHECK((back.p1[static_cast<size_t>(r)] - model.p1[static_cast<size_t>(r)]).norm() == 0.0);
    CHECK((back.p2[static_cast<size_t>(r)] - model.p2[static_cast<size_t>(r)]).norm() == 0.0);
  }
  CHECK((back.r_spec - model.r_spec).norm() == 0.0);
  CHECK((back.kernel.phi - model.kernel.phi).norm() == 0.0);
  CHECK(back.downsample.factor == 2);
  CHECK(back.downsample.offset1 == 1);
  CHECK(back.downsample.resolved_shift1(back.kernel.radius) == 5);
}

TEST_CASE("solver config JSON roundtrip is lossless") {
  SolverConfig cfg;
  cfg.l1 = 32;
  cfg.k1 = 30;
  cfg.gamma = 0.37;
  cfg.nu = 1.07;
  cfg.seed = 1234567;
  cfg.kr_truncate = 2;
  cfg.block = {8, 8, 2};
  SolverConfig back = solver_config_from_json(solver_config_to_json(cfg));
  CHECK(back.l1 == cfg.l1);
  CHECK(back.k1 == cfg.k1);
  CHECK(back.gamma == cfg.gamma);
  CHECK(back.nu == cfg.nu);
  CHECK(back.seed == cfg.seed);
  CHECK(back.block == cfg.block);
  REQUIRE(back.kr_truncate.has_value());
  CHECK(*back.kr_truncate == 2);

  SolverConfig plain;
  SolverConfig back2 = solver_config_from_json(solver_config_to_json(plain));
  CHECK(!back2.kr_truncate.has_value());
  CHECK(back2.admm_max_iter == plain.admm_max_iter);
}

TEST_CASE("report writers emit parseable artifacts") {
  TempDir dir;
  RunHistory hist;
  hist.gamma_used = 0.5;
  IterationRecord rec;
  rec.iter = 1;
  rec.x_residual = 0.25;
  hist.coding.push_back(rec);
  write_history(dir.path / "history.json", hist);
  {
    std::ifstream in(dir.path / "history.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j["gamma_used"] == 0.5);
    CHECK(j["iterations"].size() == 1);
  }

  MetricsReport rep;
  rep.psnr_db = 33.25;
  rep.rmse = 2.5;
  rep.sam_deg = 1.75;
  rep.ssim = 0.96;
  rep.peak = 1.0;
  write_metrics(dir.path / "metrics.json", rep);
  write_metrics_csv(dir.path / "metrics.csv", rep);
  {
    std::ifstream in(dir.path / "metrics.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j["psnr_db"] == 33.25);
    CHECK(j.contains("definitions"));
  }
  {
    std::ifstream in(dir.path / "metrics.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "psnr_db,rmse,sam_deg,ssim,peak,scale");
    CHECK(row.substr(0, 5) == "33.25");
  }

  RecoverabilityReport rr;
  rr.conditions.push_back({"S >= 3", true, false, 8, 3});
  rr.all_pass = true;
  write_recoverability(dir.path / "recoverability.json", rr);
  {
    std::ifstream in(dir.path / "recoverability.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j["all_pass"] == true);
    CHECK(j["conditions"][0]["name"] == "S >= 3");
  }

  write_spectrum_csv(dir.path / "spectrum.csv", Vector::Ones(3));
  {
    std::ifstream in(dir.path / "spectrum.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "index,singular_value");
  }
}
