#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <unistd.h>

#include "nlborn/errors.hpp"
#include "nlborn/experiment.hpp"
#include "nlborn/hash.hpp"

using namespace nlborn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("nlborn_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig c;
  c.h_recon = 0.25;
  c.h_data = 0.18;
  c.n_sources = 4;
  c.n_detectors = 8;
  c.wavenumbers = {1.0};
  c.g0 = 0.1;
  c.phantom = "disk";
  c.order = 3;
  c.chord_samples = 11;
  c.output_dir = out;
  return c;
}

}  // namespace

TEST_CASE("phantom catalog matches the shipped file") {
  const Json doc = Json::parse(read_file(fs::path(NLBORN_SHARE_DIR) / "phantoms.json"));
  CHECK(doc.at("version").get<int>() == phantom_catalog_version());
  const auto shipped = catalog_from_json(doc);
  CHECK(catalog_to_json(shipped, 1) == catalog_to_json(builtin_phantoms(), 1));
  CHECK(builtin_phantoms().size() == 4u);
}

TEST_CASE("phantoms") {
  const Phantom tg = find_phantom("three_gaussians");
  CHECK(tg.value({-0.4, 0.3}) == doctest::Approx(20.0).epsilon(1e-3));
  CHECK(tg.value({0.0, 0.95}) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(tg.nominal_contrast().value() == doctest::Approx(20.0).epsilon(1e-3));
  const Phantom d = find_phantom("disk");
  CHECK(d.value({0.1, 0.1}) == 5.0);
  CHECK(d.value({0.1, 0.5}) == 5.0);
  CHECK(d.value({0.1, 0.51}) == 1.0);
  CHECK_FALSE(find_phantom("zero").nominal_contrast().has_value());
  CHECK_THROWS_AS(find_phantom("nope"), ParameterError);

  Phantom bad = d;
  bad.disks[0].center = {0.7, 0.0};
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = d;
  bad.disks[0].amplitude = -2.0;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad.allow_negative = true;
  CHECK_NOTHROW(bad.validate());

  const DiskGrid grid = build_disk_grid(0.25);
  const Nonlinearity nl = build_phantom(d, grid, {2, 3});
  CHECK(nl.coefficients.size() == 2 * grid.size());
  CHECK(nl.block(0) == nl.block(1));
  CHECK(nl.block(0) == sample_phantom(d, grid));

  const Phantom back = phantom_from_json(phantom_to_json(tg));
  CHECK(phantom_to_json(back) == phantom_to_json(tg));
}

TEST_CASE("config validation") {
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(build_disk_grid(c.h_recon).size() == 1444);
  CHECK(build_disk_grid(c.h_data).size() == 3364);
  auto expect_bad = [](auto mutate) {
    ExperimentConfig x;
    mutate(x);
    CHECK_THROWS_AS(x.validate(), ParameterError);
  };
  expect_bad([](ExperimentConfig& x) { x.h_recon = 0.0; });
  expect_bad([](ExperimentConfig& x) { x.h_data = 0.1; x.h_recon = 0.09; });
  expect_bad([](ExperimentConfig& x) { x.h_data = 0.0828; });
  expect_bad([](ExperimentConfig& x) { x.wavenumbers = {}; });
  expect_bad([](ExperimentConfig& x) { x.wavenumbers = {-1.0}; });
  expect_bad([](ExperimentConfig& x) { x.n_sources = 1; });
  expect_bad([](ExperimentConfig& x) { x.rcond = 1e-9; });
  expect_bad([](ExperimentConfig& x) { x.rcond = 0.1; });
  expect_bad([](ExperimentConfig& x) { x.order = 9; });
  expect_bad([](ExperimentConfig& x) { x.degrees = {1}; });
  expect_bad([](ExperimentConfig& x) { x.g0 = -1.0; });
  expect_bad([](ExperimentConfig& x) { x.phantom = "unknown"; });
  expect_bad([](ExperimentConfig& x) { x.sigma = 0.0; });
}

TEST_CASE("config JSON and hashes") {
  ExperimentConfig c;
  c.g0 = 0.05;
  c.degrees = {2, 3};
  c.solver = SolverChoice::Born;
  const ExperimentConfig back = ExperimentConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.hash() == c.hash());

  CHECK_THROWS_AS(ExperimentConfig::from_json(Json{{"bogus", 1}}), ParameterError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(Json{{"g0", {0.1, 0.2}}}), ParameterError);
  CHECK(ExperimentConfig::from_json(Json{{"g0", {0.2}}}).g0 == 0.2);
  CHECK_THROWS_AS(ExperimentConfig::from_json(Json{{"solver", "newton"}}), ParameterError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(Json{{"order", "four"}}), ParameterError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(Json::array()), ParameterError);

  ExperimentConfig d = c;
  d.output_dir = "elsewhere";
  CHECK(d.hash() == c.hash());
  d.rcond = 1e-4;
  CHECK(d.hash() != c.hash());
  CHECK(d.data_hash() == c.data_hash());
  d.g0 = 0.06;
  CHECK(d.data_hash() != c.data_hash());
  // An explicit sigma equal to the default gives the same data.
  ExperimentConfig e = c;
  e.sigma = c.source_width();
  CHECK(e.data_hash() == c.data_hash());
}

TEST_CASE("io helpers") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(json_number(INFINITY) == "inf");
  CHECK(std::isinf(number_from_json(json_number(-INFINITY))));
  CHECK(std::isnan(number_from_json(json_number(NAN))));
  CHECK(number_from_json(json_number(2.5)) == 2.5);

  TempDir tmp("io");
  Eigen::MatrixXd m(2, 3);
  m << 1.0 / 3.0, -2, 3e-17, 4, 5, -6;
  write_file_atomic(tmp.path / "sub" / "m.csv", matrix_csv(m));
  CHECK(read_matrix_csv(tmp.path / "sub" / "m.csv") == m);

  const DiskGrid grid = build_disk_grid(0.3);
  const Eigen::VectorXd f = Eigen::VectorXd::Random(grid.size());
  write_file_atomic(tmp.path / "f.csv", field_csv(grid, f));
  CHECK(read_field_csv(tmp.path / "f.csv") == f);
  CHECK_THROWS_AS(read_file(tmp.path / "missing.csv"), Error);

  const Json gj = grid_to_json(grid);
  const DiskGrid back = grid_from_json(gj);
  CHECK(back.fingerprint() == grid.fingerprint());
  Json tampered = gj;
  tampered["fingerprint"] = "0000000000000000";
  CHECK_THROWS_AS(grid_from_json(tampered), ConfigMismatchError);
  tampered = gj;
  tampered["version"] = 99;
  CHECK_THROWS_AS(grid_from_json(tampered), ParameterError);
}

TEST_CASE("cross section") {
  const CrossSection cs = make_cross_section({-1, 0}, {1, 0}, 5);
  CHECK(cs.points.size() == 5u);
  CHECK(cs.s.back() == doctest::Approx(2.0));
  CHECK(cs.points[2].norm() == doctest::Approx(0.0));
  CHECK_THROWS_AS(make_cross_section({0, 0}, {1, 0}, 1), ParameterError);
}

TEST_CASE("small pipeline") {
  TempDir tmp("pipe");
  const ExperimentConfig cfg = small_config(tmp.path / "run");
  const ForwardRun fwd = run_forward(cfg);
  CHECK(fwd.exit_code == 0);
  CHECK(fwd.data.values.rows() == 4);
  CHECK(fwd.data.values.cols() == 8);
  CHECK(fwd.data.values.cwiseAbs().maxCoeff() > 0.0);
  for (const char* f : {"data.csv", "data.json", "truth.csv", "bounds.json", "config.json"}) {
    CHECK(fs::exists(cfg.output_dir / f));
  }
  const Json side = Json::parse(read_file(cfg.output_dir / "data.json"));
  CHECK(side["data_hash"] == cfg.data_hash());
  CHECK(side["grid"]["nodes"] == build_disk_grid(cfg.h_data).size());

  SUBCASE("forward output is deterministic") {
    const std::string first = read_file(cfg.output_dir / "data.csv");
    ExperimentConfig again = cfg;
    again.output_dir = tmp.path / "again";
    (void)run_forward(again);
    CHECK(read_file(again.output_dir / "data.csv") == first);
  }

  SUBCASE("reconstruction") {
    const ReconstructRun rec = run_reconstruct(cfg);
    CHECK(rec.exit_code == 0);
    CHECK(rec.reconstruction.orders() == 3);
    CHECK(rec.rank > 0);
    CHECK(rec.projection_distance.size() == 3u);
    CHECK(rec.bounds.M.has_value());
    CHECK(rec.bounds.data_norm.has_value());
    for (int m = 1; m <= 3; ++m) {
      CHECK(fs::exists(cfg.output_dir / ("estimate_order" + std::to_string(m) + ".csv")));
      CHECK(fs::exists(cfg.output_dir / ("correction_order" + std::to_string(m) + ".csv")));
    }
    const Json diag = Json::parse(read_file(cfg.output_dir / "diagnostics.json"));
    CHECK(diag["orders"] == 3);
    const Eigen::MatrixXd cs = read_matrix_csv(cfg.output_dir / "cross_section.csv");
    CHECK(cs.rows() == 11);
    CHECK(cs.cols() == 7);  // the first column is parsed as the row label
  }

  SUBCASE("mismatched configuration is refused") {
    ExperimentConfig other = cfg;
    other.g0 = 0.2;
    other.output_dir = tmp.path / "other";
    CHECK_THROWS_AS(run_reconstruct(other, cfg.output_dir), ConfigMismatchError);
    CHECK_THROWS_AS(run_bounds(other, cfg.output_dir), ConfigMismatchError);
    // Inverse-side settings may change freely.
    ExperimentConfig inv = cfg;
    inv.rcond = 1e-4;
    inv.order = 2;
    inv.output_dir = tmp.path / "inv";
    CHECK(run_reconstruct(inv, cfg.output_dir).reconstruction.orders() == 2);
  }

  SUBCASE("bounds with data") {
    ExperimentConfig b = cfg;
    b.output_dir = tmp.path / "bounds";
    const BoundsReport r = run_bounds(b, cfg.output_dir);
    CHECK(r.inverse_hypothesis.has_value());
    CHECK(r.mu > 0.0);
    CHECK(fs::exists(b.output_dir / "bounds.json"));
    CHECK_FALSE(format_bounds_table(r).empty());
  }
}

TEST_CASE("zero phantom gives zero data and a zero reconstruction") {
  TempDir tmp("zero");
  ExperimentConfig cfg = small_config(tmp.path);
  cfg.phantom = "zero";
  const ForwardRun fwd = run_forward(cfg);
  CHECK(fwd.data.values.cwiseAbs().maxCoeff() == 0.0);
  const ReconstructRun rec = run_reconstruct(cfg);
  CHECK(rec.reconstruction.estimate().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sweep, grid and phantom commands") {
  TempDir tmp("sweep");
  const ExperimentConfig cfg = small_config(tmp.path);
  const auto rows = run_sweep(cfg, {0.1, 0.01, 0.001});
  REQUIRE(rows.size() == 3u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].bounds.r > rows[i - 1].bounds.r);
    CHECK(rows[i].bounds.coupling == doctest::Approx(rows[0].bounds.coupling).epsilon(1e-8));
  }
  CHECK(fs::exists(tmp.path / "sweep.csv"));
  CHECK_THROWS_AS(run_sweep(cfg, {}), ParameterError);

  run_grid(cfg);
  const DiskGrid g = grid_from_json(Json::parse(read_file(tmp.path / "grid_data.json")));
  CHECK(g.size() == build_disk_grid(cfg.h_data).size());
  run_phantom(cfg);
  const Json pj = Json::parse(read_file(tmp.path / "phantom.json"));
  CHECK(pj["grid_max"].get<double>() == 5.0);
}
