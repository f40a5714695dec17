#include "nlborn/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "nlborn/errors.hpp"
#include "nlborn/hash.hpp"

namespace nlborn {

namespace fs = std::filesystem;

namespace {

double sup(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

std::string solver_name(SolverChoice s) {
  return s == SolverChoice::Born ? "born" : "fixed_point";
}

std::string q_name(QPolynomial q) {
  return q == QPolynomial::FullRange ? "full" : "present";
}

std::string digest(const Json& j) {
  Fnv1a h;
  h.update(j.dump());
  return hex_digest(h.digest());
}

// One named column per degree block: "value" for a single degree.
void write_stacked(const fs::path& path, const DiskGrid& grid, const std::vector<int>& degrees,
                   const Eigen::VectorXd& stacked) {
  const int n = grid.size();
  std::vector<std::string> names;
  std::vector<Eigen::VectorXd> cols;
  for (std::size_t d = 0; d < degrees.size(); ++d) {
    names.push_back(degrees.size() == 1 ? "value" : "beta_" + std::to_string(degrees[d]));
    cols.push_back(stacked.segment(static_cast<long>(d) * n, n));
  }
  write_file_atomic(path, fields_csv(grid, names, cols));
}

void write_json(const fs::path& path, const Json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

}  // namespace

void ExperimentConfig::validate() const {
  if (!(h_recon > 0.0 && h_recon <= 0.5) || !(h_data > 0.0 && h_data <= 0.5)) {
    throw ParameterError("grid spacings must lie in (0, 0.5]");
  }
  if (!(h_data < h_recon)) throw ParameterError("data grid must be strictly finer than the reconstruction grid");
  if (build_disk_grid(h_data).radial <= build_disk_grid(h_recon).radial) {
    throw ParameterError("data and reconstruction spacings give the same grid");
  }
  if (n_sources < 1 || n_detectors < 1) throw ParameterError("source and detector counts must be positive");
  if (wavenumbers.empty() || static_cast<int>(wavenumbers.size()) > n_sources) {
    throw ParameterError("need between 1 and n_sources wavenumbers");
  }
  for (double k : wavenumbers) {
    if (!(k > 0.0) || !std::isfinite(k)) throw ParameterError("wavenumbers must be positive");
  }
  if (!(g0 >= 0.0) || !std::isfinite(g0)) throw ParameterError("g0 must be finite and >= 0");
  if (sigma && !(*sigma > 0.0)) throw ParameterError("sigma must be positive");
  validate_degrees(degrees);
  if (!(rcond >= 1e-8 && rcond <= 1e-2)) throw ParameterError("rcond must lie in [1e-8, 1e-2]");
  if (order < 1 || order > 8) throw ParameterError("IBS order must lie in [1, 8]");
  if (!(divergence_guard > 0.0)) throw ParameterError("divergence guard must be positive");
  if (born_order < 1) throw ParameterError("Born order must be >= 1");
  if (chord_samples < 2) throw ParameterError("cross section needs at least 2 samples");
  resolved_phantom().validate();
}

double ExperimentConfig::source_width() const {
  if (sigma) return *sigma;
  return 3.0 * build_disk_grid(h_recon).boundary_spacing();
}

Phantom ExperimentConfig::resolved_phantom() const {
  return custom_phantom ? *custom_phantom : find_phantom(phantom);
}

Json ExperimentConfig::to_json() const {
  Json j;
  j["h_recon"] = h_recon;
  j["h_data"] = h_data;
  j["n_sources"] = n_sources;
  j["n_detectors"] = n_detectors;
  j["wavenumbers"] = wavenumbers;
  j["g0"] = g0;
  j["sigma"] = sigma ? Json(*sigma) : Json(nullptr);
  j["phantom"] = phantom;
  if (custom_phantom) j["custom_phantom"] = phantom_to_json(*custom_phantom);
  j["degrees"] = degrees;
  j["rcond"] = rcond;
  j["order"] = order;
  j["row_normalize"] = row_normalize;
  j["divergence_guard"] = divergence_guard;
  j["solver"] = solver_name(solver);
  j["born_order"] = born_order;
  j["q"] = q_name(q);
  j["chord"] = chord;
  j["chord_samples"] = chord_samples;
  j["seed"] = seed;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
  static const std::vector<std::string> known = {
      "h_recon", "h_data",    "n_sources",  "n_detectors",    "wavenumbers",
      "g0",      "sigma",     "phantom",    "custom_phantom", "degrees",
      "rcond",   "order",     "row_normalize", "divergence_guard", "solver",
      "born_order", "q",      "chord",      "chord_samples",  "seed",
      "output_dir"};
  if (!j.is_object()) throw ParameterError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ParameterError("unknown config key '" + key + "'");
    }
  }
  ExperimentConfig c;
  try {
    c.h_recon = j.value("h_recon", c.h_recon);
    c.h_data = j.value("h_data", c.h_data);
    c.n_sources = j.value("n_sources", c.n_sources);
    c.n_detectors = j.value("n_detectors", c.n_detectors);
    c.wavenumbers = j.value("wavenumbers", c.wavenumbers);
    if (j.contains("g0")) {
      const Json& g = j["g0"];
      if (g.is_array()) {
        if (g.size() != 1) throw ParameterError("one g0 per experiment");
        c.g0 = g[0].get<double>();
      } else {
        c.g0 = g.get<double>();
      }
    }
    if (j.contains("sigma") && !j["sigma"].is_null()) c.sigma = j["sigma"].get<double>();
    c.phantom = j.value("phantom", c.phantom);
    if (j.contains("custom_phantom")) c.custom_phantom = phantom_from_json(j["custom_phantom"]);
    c.degrees = j.value("degrees", c.degrees);
    c.rcond = j.value("rcond", c.rcond);
    c.order = j.value("order", c.order);
    c.row_normalize = j.value("row_normalize", c.row_normalize);
    c.divergence_guard = j.value("divergence_guard", c.divergence_guard);
    const std::string solver = j.value("solver", solver_name(c.solver));
    if (solver != "fixed_point" && solver != "born") throw ParameterError("solver must be fixed_point or born");
    c.solver = solver == "born" ? SolverChoice::Born : SolverChoice::FixedPoint;
    c.born_order = j.value("born_order", c.born_order);
    const std::string q = j.value("q", q_name(c.q));
    if (q != "present" && q != "full") throw ParameterError("q must be present or full");
    c.q = q == "full" ? QPolynomial::FullRange : QPolynomial::PresentDegrees;
    c.chord = j.value("chord", c.chord);
    c.chord_samples = j.value("chord_samples", c.chord_samples);
    c.seed = j.value("seed", c.seed);
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("invalid config value: ") + e.what());
  }
  return c;
}

std::string ExperimentConfig::hash() const { return digest(to_json()); }

std::string ExperimentConfig::data_hash() const {
  Json j;
  j["h_data"] = h_data;
  j["n_sources"] = n_sources;
  j["n_detectors"] = n_detectors;
  j["wavenumbers"] = wavenumbers;
  j["g0"] = g0;
  j["sigma"] = source_width();
  j["phantom"] = phantom_to_json(resolved_phantom());
  j["degrees"] = degrees;
  j["solver"] = solver_name(solver);
  j["born_order"] = born_order;
  return digest(j);
}

SensorLayout experiment_layout(const ExperimentConfig& cfg) {
  return make_sensor_layout(cfg.n_sources, cfg.n_detectors, cfg.wavenumbers, cfg.g0,
                            cfg.source_width());
}

ReconstructionSetup make_reconstruction_setup(const ExperimentConfig& cfg) {
  ReconstructionSetup s;
  s.grid = make_disk_grid(cfg.h_recon);
  s.layout = experiment_layout(cfg);
  s.model = std::make_shared<ForwardModel>(
      ForwardModel::build(s.grid, s.layout, cfg.degrees, ForwardModel::GreensMode::Dense));
  s.k1 = assemble_k1(*s.model);
  return s;
}

BoundsReport compute_bounds(const ExperimentConfig& cfg, const ReconstructionSetup& setup,
                            const Regularizer& reg, const std::optional<Eigen::MatrixXd>& data) {
  BoundsReport r = make_bounds_report(setup.model->mu_per_wavenumber(),
                                      setup.model->background_norm(), operator_norm(reg),
                                      cfg.degrees, cfg.q);
  if (data) {
    r.data_norm = sup(reg.apply(flatten_data(*data)));
    r.inverse_hypothesis = *r.data_norm < r.r;
  }
  return r;
}

ForwardRun run_forward(const ExperimentConfig& cfg) {
  cfg.validate();
  const fs::path out = cfg.output_dir;
  auto fine = make_disk_grid(cfg.h_data);
  const SensorLayout layout = experiment_layout(cfg);
  const Phantom ph = cfg.resolved_phantom();

  ForwardRun run;
  {
    const ForwardModel model =
        ForwardModel::build(fine, layout, cfg.degrees, ForwardModel::GreensMode::Implicit);
    run.data = scattering_data(model, build_phantom(ph, *fine, cfg.degrees), cfg.solver,
                               cfg.born_order);
  }
  const ReconstructionSetup setup = make_reconstruction_setup(cfg);
  const Regularizer reg(setup.k1.matrix, cfg.rcond, cfg.row_normalize);
  run.bounds = compute_bounds(cfg, setup, reg, run.data.values);
  run.exit_code = run.data.failed_sources.empty() ? 0 : 2;

  Json side;
  side["format"] = "nlborn-data";
  side["config_hash"] = cfg.hash();
  side["data_hash"] = cfg.data_hash();
  side["grid_hash"] = hex_digest(fine->fingerprint());
  side["grid"] = {{"radial", fine->radial}, {"angular", fine->angular}, {"nodes", fine->size()}};
  side["n_sources"] = cfg.n_sources;
  side["n_detectors"] = cfg.n_detectors;
  side["g0"] = cfg.g0;
  side["sigma"] = cfg.source_width();
  side["wavenumbers"] = run.data.wavenumbers;
  side["layout"] = layout_to_json(layout);
  side["solver"] = solver_name(cfg.solver);
  side["iterations"] = run.data.iterations;
  side["failed_sources"] = run.data.failed_sources;
  side["failures"] = run.data.failures;
  side["phantom"] = phantom_to_json(ph);

  write_file_atomic(out / "data.csv", matrix_csv(run.data.values));
  write_json(out / "data.json", side);
  write_stacked(out / "truth.csv", *setup.grid, cfg.degrees,
                build_phantom(ph, *setup.grid, cfg.degrees).coefficients);
  write_json(out / "bounds.json", {{"config_hash", cfg.hash()}, {"bounds", bounds_to_json(run.bounds)}});
  Json cj = cfg.to_json();
  cj["config_hash"] = cfg.hash();
  write_json(out / "config.json", cj);
  return run;
}

ReconstructRun run_reconstruct(const ExperimentConfig& cfg, std::optional<fs::path> data_dir) {
  cfg.validate();
  const fs::path in = data_dir.value_or(cfg.output_dir);
  const fs::path out = cfg.output_dir;
  const Json side = Json::parse(read_file(in / "data.json"));
  if (side.value("data_hash", "") != cfg.data_hash()) {
    throw ConfigMismatchError("data in " + in.string() +
                              " was produced with a different data configuration");
  }
  const Eigen::MatrixXd values = read_matrix_csv(in / "data.csv");
  if (values.rows() != cfg.n_sources || values.cols() != cfg.n_detectors) {
    throw ShapeError("data shape does not match the configured sensor layout");
  }

  const ReconstructionSetup setup = make_reconstruction_setup(cfg);
  const Regularizer reg(setup.k1.matrix, cfg.rcond, cfg.row_normalize);
  ReconstructRun run;
  run.rank = reg.rank();
  run.reconstruction =
      ibs_reconstruct(values, reg, *setup.model, {cfg.order, cfg.divergence_guard});
  const Reconstruction& rec = run.reconstruction;
  run.truth = build_phantom(cfg.resolved_phantom(), *setup.grid, cfg.degrees).coefficients;
  run.projection = projection(reg, setup.k1, run.truth);
  const double pn = sup(run.projection);
  for (const auto& est : rec.partial_sums) {
    run.projection_distance.push_back(pn > 0.0 ? sup(est - run.projection) / pn : sup(est));
  }
  run.bounds = compute_bounds(cfg, setup, reg, values);
  run.bounds.M = std::max(sup(run.truth), sup(rec.estimate()));
  run.bounds.residual = sup(run.truth - run.projection);
  run.bounds.error = error_bound(run.bounds.mu, run.bounds.nu0, run.bounds.k1_norm,
                                 *run.bounds.M, *run.bounds.residual, cfg.degrees, cfg.q);
  run.exit_code = rec.diverged ? 3 : 0;

  const DiskGrid& grid = *setup.grid;
  for (int m = 1; m <= rec.orders(); ++m) {
    const auto i = static_cast<std::size_t>(m - 1);
    write_stacked(out / ("estimate_order" + std::to_string(m) + ".csv"), grid, cfg.degrees,
                  rec.partial_sums[i]);
    write_stacked(out / ("correction_order" + std::to_string(m) + ".csv"), grid, cfg.degrees,
                  rec.corrections[i]);
  }
  write_stacked(out / "truth.csv", grid, cfg.degrees, run.truth);
  write_stacked(out / "projection.csv", grid, cfg.degrees, run.projection);

  // Cross section of the first degree block.
  const CrossSection cs = make_cross_section({cfg.chord[0], cfg.chord[1]},
                                             {cfg.chord[2], cfg.chord[3]}, cfg.chord_samples);
  const int n = grid.size();
  std::vector<Eigen::VectorXd> cols = {interpolate(grid, run.truth.head(n), cs.points),
                                       interpolate(grid, run.projection.head(n), cs.points)};
  std::string csv = "s,x,y,truth,projection";
  for (int m = 1; m <= rec.orders(); ++m) {
    csv += ",order" + std::to_string(m);
    cols.push_back(interpolate(grid, rec.partial_sums[static_cast<std::size_t>(m - 1)].head(n),
                               cs.points));
  }
  csv += "\n";
  for (std::size_t i = 0; i < cs.points.size(); ++i) {
    csv += format_double(cs.s[i]) + "," + format_double(cs.points[i].x()) + "," +
           format_double(cs.points[i].y());
    for (const auto& c : cols) csv += "," + format_double(c[static_cast<long>(i)]);
    csv += "\n";
  }
  write_file_atomic(out / "cross_section.csv", csv);

  Json diag;
  diag["config_hash"] = cfg.hash();
  diag["data_hash"] = cfg.data_hash();
  diag["grid_hash"] = hex_digest(grid.fingerprint());
  diag["orders"] = rec.orders();
  diag["correction_norms"] = rec.correction_norms;
  diag["projection_distance"] = run.projection_distance;
  diag["diverged"] = rec.diverged;
  diag["diverged_at"] = rec.diverged_at;
  diag["rank"] = run.rank;
  diag["rcond"] = cfg.rcond;
  diag["k1_norm"] = json_number(run.bounds.k1_norm);
  diag["bounds"] = bounds_to_json(run.bounds);
  write_json(out / "diagnostics.json", diag);
  Json cj = cfg.to_json();
  cj["config_hash"] = cfg.hash();
  write_json(out / "config.json", cj);
  return run;
}

BoundsReport run_bounds(const ExperimentConfig& cfg, std::optional<fs::path> data_dir) {
  cfg.validate();
  const ReconstructionSetup setup = make_reconstruction_setup(cfg);
  const Regularizer reg(setup.k1.matrix, cfg.rcond, cfg.row_normalize);
  std::optional<Eigen::MatrixXd> data;
  if (data_dir && fs::exists(*data_dir / "data.json")) {
    const Json side = Json::parse(read_file(*data_dir / "data.json"));
    if (side.value("data_hash", "") != cfg.data_hash()) {
      throw ConfigMismatchError("data in " + data_dir->string() +
                                " was produced with a different data configuration");
    }
    data = read_matrix_csv(*data_dir / "data.csv");
    if (data->rows() != cfg.n_sources || data->cols() != cfg.n_detectors) {
      throw ShapeError("data shape does not match the configured sensor layout");
    }
  }
  BoundsReport r = compute_bounds(cfg, setup, reg, data);
  write_json(cfg.output_dir / "bounds.json",
             {{"config_hash", cfg.hash()}, {"bounds", bounds_to_json(r)}});
  return r;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const std::vector<double>& g0s) {
  if (g0s.empty()) throw ParameterError("sweep needs at least one g0");
  std::vector<SweepRow> rows;
  Json all = Json::array();
  std::string csv = "g0,mu,nu0,nu,K,forward_radius,k1_norm,coupling,C,r,M_threshold\n";
  for (double g0 : g0s) {
    ExperimentConfig c = cfg;
    c.g0 = g0;
    c.validate();
    const ReconstructionSetup setup = make_reconstruction_setup(c);
    const Regularizer reg(setup.k1.matrix, c.rcond, c.row_normalize);
    SweepRow row{g0, compute_bounds(c, setup, reg)};
    const BoundsReport& b = row.bounds;
    for (double v : {g0, b.mu, b.nu0, b.nu, b.K, b.forward_radius, b.k1_norm, b.coupling, b.C,
                     b.r, b.M_threshold}) {
      csv += format_double(v) + ",";
    }
    csv.back() = '\n';
    all.push_back({{"g0", g0}, {"config_hash", c.hash()}, {"bounds", bounds_to_json(b)}});
    rows.push_back(std::move(row));
  }
  write_file_atomic(cfg.output_dir / "sweep.csv", csv);
  write_json(cfg.output_dir / "sweep.json", {{"config_hash", cfg.hash()}, {"rows", all}});
  return rows;
}

void run_grid(const ExperimentConfig& cfg) {
  cfg.validate();
  const SensorLayout layout = experiment_layout(cfg);
  write_json(cfg.output_dir / "grid_recon.json", grid_to_json(build_disk_grid(cfg.h_recon), &layout));
  write_json(cfg.output_dir / "grid_data.json", grid_to_json(build_disk_grid(cfg.h_data), &layout));
}

void run_phantom(const ExperimentConfig& cfg) {
  cfg.validate();
  const DiskGrid grid = build_disk_grid(cfg.h_recon);
  const Phantom ph = cfg.resolved_phantom();
  const Field f = sample_phantom(ph, grid);
  write_file_atomic(cfg.output_dir / "phantom.csv", field_csv(grid, f));
  Json j = phantom_to_json(ph);
  const auto c = ph.nominal_contrast();
  j["nominal_contrast"] = c ? Json(*c) : Json(nullptr);
  j["grid_max"] = f.maxCoeff();
  j["grid_min"] = f.minCoeff();
  j["config_hash"] = cfg.hash();
  write_json(cfg.output_dir / "phantom.json", j);
}

CrossSection make_cross_section(const Eigen::Vector2d& a, const Eigen::Vector2d& b, int n) {
  if (n < 2) throw ParameterError("cross section needs at least 2 samples");
  CrossSection cs;
  const double len = (b - a).norm();
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    cs.points.push_back(a + t * (b - a));
    cs.s.push_back(t * len);
  }
  return cs;
}

std::string format_bounds_table(const BoundsReport& r) {
  std::string out;
  auto row = [&out](const std::string& name, double v) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "  %-22s %.6e\n", name.c_str(), v);
    out += buf;
  };
  out += "bounds (degrees";
  for (int d : r.degrees) out += " " + std::to_string(d);
  out += ")\n";
  for (const auto& [k, mu] : r.mu_per_wavenumber) row("mu(k=" + format_double(k) + ")", mu);
  row("mu", r.mu);
  row("nu0 = sup|u0|", r.nu0);
  row("nu", r.nu);
  row("K", r.K);
  row("forward radius 1/(K mu)", r.forward_radius);
  row("||K1^+||", r.k1_norm);
  row("C", r.C);
  row("inverse radius r", r.r);
  row("M threshold", r.M_threshold);
  if (r.M) row("M", *r.M);
  if (r.residual) row("projection residual", *r.residual);
  if (r.error) {
    out += std::string("  error-bound hypothesis ") + (r.error->hypothesis_holds ? "holds" : "violated") + "\n";
    if (r.error->hypothesis_holds) row("error bound", r.error->bound);
  }
  if (r.data_norm) {
    row("||K1^+ phi||", *r.data_norm);
    out += std::string("  data inside radius     ") + (*r.inverse_hypothesis ? "yes" : "no") + "\n";
  }
  return out;
}

}  // namespace nlborn
