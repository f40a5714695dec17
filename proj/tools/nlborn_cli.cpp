#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlborn/errors.hpp"
#include "nlborn/experiment.hpp"

namespace fs = std::filesystem;
using namespace nlborn;

namespace {

struct Flags {
  std::string config_file;
  double h_recon = 0, h_data = 0, g0 = 0, sigma = 0, rcond = 0, guard = 0;
  int sources = 0, detectors = 0, order = 0, born_order = 0, chord_samples = 0;
  std::vector<double> ks, chord;
  std::vector<int> degrees;
  std::string phantom, phantom_file, solver, q, out;
  bool row_normalize = false;
  std::uint64_t seed = 0;
};

struct Options {
  CLI::Option* h_recon = nullptr;
  CLI::Option* h_data = nullptr;
  CLI::Option* g0 = nullptr;
  CLI::Option* sigma = nullptr;
  CLI::Option* rcond = nullptr;
  CLI::Option* guard = nullptr;
  CLI::Option* sources = nullptr;
  CLI::Option* detectors = nullptr;
  CLI::Option* order = nullptr;
  CLI::Option* born_order = nullptr;
  CLI::Option* ks = nullptr;
  CLI::Option* degrees = nullptr;
  CLI::Option* phantom = nullptr;
  CLI::Option* phantom_file = nullptr;
  CLI::Option* solver = nullptr;
  CLI::Option* q = nullptr;
  CLI::Option* out = nullptr;
  CLI::Option* row_normalize = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* chord = nullptr;
  CLI::Option* chord_samples = nullptr;
};

void add_config_flags(CLI::App& app, Flags& f, Options& o) {
  app.add_option("-c,--config", f.config_file, "JSON experiment config")->check(CLI::ExistingFile);
  o.h_recon = app.add_option("--h-recon", f.h_recon, "reconstruction grid spacing");
  o.h_data = app.add_option("--h-data", f.h_data, "data grid spacing (finer)");
  o.sources = app.add_option("--sources", f.sources, "number of sources");
  o.detectors = app.add_option("--detectors", f.detectors, "number of detectors");
  o.ks = app.add_option("-k,--wavenumbers", f.ks, "wavenumbers, assigned in source blocks");
  o.g0 = app.add_option("--g0", f.g0, "source strength");
  o.sigma = app.add_option("--sigma", f.sigma, "source width (arclength)");
  o.phantom = app.add_option("--phantom", f.phantom, "catalog phantom name");
  o.phantom_file = app.add_option("--phantom-file", f.phantom_file, "custom phantom JSON")
                       ->check(CLI::ExistingFile);
  o.degrees = app.add_option("--degrees", f.degrees, "nonlinearity degrees");
  o.rcond = app.add_option("--rcond", f.rcond, "singular value cutoff ratio");
  o.order = app.add_option("-M,--order", f.order, "inverse series order");
  o.row_normalize = app.add_flag("--row-normalize", f.row_normalize, "normalize K1 rows before the SVD");
  o.guard = app.add_option("--guard", f.guard, "divergence guard factor");
  o.solver = app.add_option("--solver", f.solver, "fixed_point or born")
                 ->check(CLI::IsMember({"fixed_point", "born"}));
  o.born_order = app.add_option("--born-order", f.born_order, "Born series order for --solver born");
  o.q = app.add_option("--q", f.q, "present or full")->check(CLI::IsMember({"present", "full"}));
  o.chord = app.add_option("--chord", f.chord, "cross-section chord x0 y0 x1 y1")->expected(4);
  o.chord_samples = app.add_option("--chord-samples", f.chord_samples, "cross-section samples");
  o.seed = app.add_option("--seed", f.seed, "seed");
  o.out = app.add_option("-o,--out", f.out, "output directory (relative to $NLBORN_OUTPUT_ROOT)");
}

ExperimentConfig resolve(const Flags& f, const Options& o) {
  ExperimentConfig c;
  if (!f.config_file.empty()) c = ExperimentConfig::from_json(Json::parse(read_file(f.config_file)));
  if (o.h_recon->count()) c.h_recon = f.h_recon;
  if (o.h_data->count()) c.h_data = f.h_data;
  if (o.sources->count()) c.n_sources = f.sources;
  if (o.detectors->count()) c.n_detectors = f.detectors;
  if (o.ks->count()) c.wavenumbers = f.ks;
  if (o.g0->count()) c.g0 = f.g0;
  if (o.sigma->count()) c.sigma = f.sigma;
  if (o.phantom->count()) {
    c.phantom = f.phantom;
    c.custom_phantom.reset();
  }
  if (o.phantom_file->count()) c.custom_phantom = phantom_from_json(Json::parse(read_file(f.phantom_file)));
  if (o.degrees->count()) c.degrees = f.degrees;
  if (o.rcond->count()) c.rcond = f.rcond;
  if (o.order->count()) c.order = f.order;
  if (o.row_normalize->count()) c.row_normalize = f.row_normalize;
  if (o.guard->count()) c.divergence_guard = f.guard;
  if (o.solver->count()) c.solver = f.solver == "born" ? SolverChoice::Born : SolverChoice::FixedPoint;
  if (o.born_order->count()) c.born_order = f.born_order;
  if (o.q->count()) c.q = f.q == "full" ? QPolynomial::FullRange : QPolynomial::PresentDegrees;
  if (o.chord->count()) c.chord = {f.chord[0], f.chord[1], f.chord[2], f.chord[3]};
  if (o.chord_samples->count()) c.chord_samples = f.chord_samples;
  if (o.seed->count()) c.seed = f.seed;
  if (o.out->count()) c.output_dir = f.out;
  if (const char* root = std::getenv("NLBORN_OUTPUT_ROOT"); root && *root && c.output_dir.is_relative()) {
    c.output_dir = fs::path(root) / c.output_dir;
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear Born series forward and inverse toolkit on the unit disk"};
  app.require_subcommand(1);

  Flags f;
  std::vector<Options> opts(6);
  std::vector<CLI::App*> subs;
  auto add = [&](const char* name, const char* help) {
    CLI::App* s = app.add_subcommand(name, help);
    add_config_flags(*s, f, opts[subs.size()]);
    subs.push_back(s);
    return s;
  };
  add("grid", "write the reconstruction and data grids with the sensor layout");
  std::string data_dir;
  std::vector<double> g0s;
  add("forward", "synthesize scattering data on the data grid");
  add("reconstruct", "run the inverse Born series on existing data")
      ->add_option("--data", data_dir, "directory holding data.csv and data.json");
  add("bounds", "print and write the analytic bounds")
      ->add_option("--data", data_dir, "directory holding data for the radius check");
  add("phantom", "sample the phantom on the reconstruction grid");
  add("sweep", "bounds over several g0 values")
      ->add_option("--g0-list", g0s, "g0 values")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (!subs[i]->parsed()) continue;
      const std::string name = subs[i]->get_name();
      const ExperimentConfig cfg = resolve(f, opts[i]);
      std::optional<fs::path> dd;
      if (!data_dir.empty()) dd = data_dir;
      if (name == "grid") {
        run_grid(cfg);
        std::printf("wrote grids to %s\n", cfg.output_dir.c_str());
        return 0;
      }
      if (name == "phantom") {
        run_phantom(cfg);
        std::printf("wrote phantom to %s\n", cfg.output_dir.c_str());
        return 0;
      }
      if (name == "forward") {
        const ForwardRun run = run_forward(cfg);
        std::printf("data %ld x %ld written to %s (config %s)\n",
                    static_cast<long>(run.data.values.rows()),
                    static_cast<long>(run.data.values.cols()), cfg.output_dir.c_str(),
                    cfg.hash().c_str());
        for (const auto& msg : run.data.failures) std::fprintf(stderr, "warning: %s\n", msg.c_str());
        std::fputs(format_bounds_table(run.bounds).c_str(), stdout);
        return run.exit_code;
      }
      if (name == "reconstruct") {
        const ReconstructRun run = run_reconstruct(cfg, dd);
        const Reconstruction& rec = run.reconstruction;
        std::printf("rank %d, rcond %g\n", run.rank, cfg.rcond);
        for (int m = 0; m < rec.orders(); ++m) {
          std::printf("  order %d  |correction| %.6e  distance to projection %.6e\n", m + 1,
                      rec.correction_norms[static_cast<std::size_t>(m)],
                      run.projection_distance[static_cast<std::size_t>(m)]);
        }
        if (rec.diverged) std::fprintf(stderr, "warning: divergence guard tripped at order %d\n", rec.diverged_at);
        std::fputs(format_bounds_table(run.bounds).c_str(), stdout);
        return run.exit_code;
      }
      if (name == "bounds") {
        std::fputs(format_bounds_table(run_bounds(cfg, dd)).c_str(), stdout);
        return 0;
      }
      if (name == "sweep") {
        std::printf("%-12s %-14s %-14s %-14s\n", "g0", "nu0", "C", "r");
        for (const auto& row : run_sweep(cfg, g0s)) {
          std::printf("%-12g %-14.6e %-14.6e %-14.6e\n", row.g0, row.bounds.nu0, row.bounds.C,
                      row.bounds.r);
        }
        return 0;
      }
    }
  } catch (const nlborn::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
