#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nlborn/bounds.hpp"
#include "nlborn/forward.hpp"
#include "nlborn/inverse.hpp"
#include "nlborn/io.hpp"
#include "nlborn/phantom.hpp"

namespace nlborn {

struct ExperimentConfig {
  double h_recon = 0.083;  // 19 rings x 76 angles, 1444 nodes
  double h_data = 0.0555;  // 29 rings x 116 angles, 3364 nodes
  int n_sources = 16;
  int n_detectors = 32;
  std::vector<double> wavenumbers{1.0, 2.0};
  double g0 = 0.01;
  // Gaussian source width; defaults to 3 boundary spacings of the
  // reconstruction grid and is shared by both grids.
  std::optional<double> sigma;
  std::string phantom = "three_gaussians";
  std::optional<Phantom> custom_phantom;  // overrides the catalog lookup
  std::vector<int> degrees{3};
  double rcond = 1e-5;
  int order = 4;
  bool row_normalize = false;
  double divergence_guard = 1e6;
  SolverChoice solver = SolverChoice::FixedPoint;
  int born_order = 10;
  QPolynomial q = QPolynomial::PresentDegrees;
  // Cross-section chord endpoints (x0, y0, x1, y1); default horizontal diameter.
  std::array<double, 4> chord{-1.0, 0.0, 1.0, 0.0};
  int chord_samples = 201;
  std::filesystem::path output_dir = "nlborn_run";
  std::uint64_t seed = 0;

  // Throws ParameterError on any violated constraint.
  void validate() const;
  double source_width() const;
  Phantom resolved_phantom() const;

  Json to_json() const;  // output_dir is not part of the document
  static ExperimentConfig from_json(const Json& j);

  // Digest of the whole document.
  std::string hash() const;
  // Digest of the fields that determine the scattering data.
  std::string data_hash() const;
};

struct ForwardRun {
  ScatteringData data;
  BoundsReport bounds;
  int exit_code = 0;  // 2 when some source failed to converge
};

struct ReconstructRun {
  Reconstruction reconstruction;
  Eigen::VectorXd truth;       // phantom on the reconstruction grid, stacked
  Eigen::VectorXd projection;  // K1^+ K1 truth
  std::vector<double> projection_distance;  // per order, relative sup-norm
  BoundsReport bounds;
  int rank = 0;
  int exit_code = 0;  // 3 when the divergence guard tripped
};

// Everything needed on the reconstruction grid.
struct ReconstructionSetup {
  std::shared_ptr<const DiskGrid> grid;
  SensorLayout layout;
  std::shared_ptr<ForwardModel> model;
  LinearizedMap k1;
};

SensorLayout experiment_layout(const ExperimentConfig& cfg);
ReconstructionSetup make_reconstruction_setup(const ExperimentConfig& cfg);

// Bounds on the reconstruction grid; data (sources x detectors), when given,
// fills the inverse-radius hypothesis check.
BoundsReport compute_bounds(const ExperimentConfig& cfg, const ReconstructionSetup& setup,
                            const Regularizer& reg,
                            const std::optional<Eigen::MatrixXd>& data = std::nullopt);

// Data on the data grid, bounds on the reconstruction grid. Writes data.csv,
// data.json, truth.csv and bounds.json under cfg.output_dir.
ForwardRun run_forward(const ExperimentConfig& cfg);

// Reads data.csv / data.json from data_dir (defaults to cfg.output_dir) and
// refuses data produced under a different data configuration.
ReconstructRun run_reconstruct(const ExperimentConfig& cfg,
                               std::optional<std::filesystem::path> data_dir = std::nullopt);

// Writes bounds.json; evaluates the data hypothesis when data_dir holds data.
BoundsReport run_bounds(const ExperimentConfig& cfg,
                        std::optional<std::filesystem::path> data_dir = std::nullopt);

struct SweepRow {
  double g0 = 0.0;
  BoundsReport bounds;
};

// Bounds for each g0 with K1 rebuilt per value; writes sweep.csv and sweep.json.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const std::vector<double>& g0s);

// Writes grid_recon.json and grid_data.json with the sensor layout.
void run_grid(const ExperimentConfig& cfg);

// Writes phantom.csv on the reconstruction grid and phantom.json.
void run_phantom(const ExperimentConfig& cfg);

// Equispaced samples along the segment a-b (inclusive).
struct CrossSection {
  std::vector<Eigen::Vector2d> points;
  std::vector<double> s;  // arclength from a
};
CrossSection make_cross_section(const Eigen::Vector2d& a, const Eigen::Vector2d& b, int n);

// Human-readable table of a bounds report.
std::string format_bounds_table(const BoundsReport& r);

}  // namespace nlborn
