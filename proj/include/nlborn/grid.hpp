#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace nlborn {

/// Polar collocation grid on the closed unit disk.
///
/// Radii are the positive Chebyshev points cos(pi j / n_cheb), j = 0..radial-1,
/// of an odd-order Chebyshev grid on [-1, 1], so the origin is never a node and
/// the first ring is the unit circle. Each ring carries `angular` equispaced
/// angles 2 pi p / angular starting at 0. Node (j, p) has index j * angular + p;
/// nodes 0..angular-1 are the boundary, counterclockwise. A value at radius -r
/// and angle t is the value at radius r and angle t + pi.
///
/// Quadrature weights integrate the polar interpolant exactly (trapezoid rule in
/// angle, exact integration of the Chebyshev interpolant against r dr).
struct DiskGrid {
  int radial = 0;   // number of rings, including the boundary ring
  int angular = 0;  // nodes per ring, a multiple of 4
  double h = 0.0;   // angular spacing on the unit circle, 2 pi / angular
  std::vector<double> cheb_points;  // all n_cheb + 1 points, descending from 1
  std::vector<double> radii;        // first `radial` Chebyshev points
  std::vector<Eigen::Vector2d> nodes;
  std::vector<std::uint8_t> interior_mask;
  std::vector<int> boundary_nodes;
  std::vector<Eigen::Vector2d> boundary_normals;
  Eigen::VectorXd quad_weights;
  Eigen::VectorXd boundary_weights;  // aligned with boundary_nodes

  int size() const { return static_cast<int>(nodes.size()); }
  int boundary_size() const { return static_cast<int>(boundary_nodes.size()); }
  int cheb_order() const { return 2 * radial - 1; }
  int index(int ring, int p) const { return ring * angular + p; }
  double boundary_spacing() const;
  // Angle in [0, 2pi) of the i-th boundary node.
  double boundary_angle(int i) const;
  // Stable 64-bit digest of the grid parameters and node coordinates.
  std::uint64_t fingerprint() const;
};

// Grid with angular spacing at most target_h and about the same spacing across
// the center. Accepts 0 < target_h <= 0.5.
DiskGrid build_disk_grid(double target_h);

// Grid from explicit ring and angle counts (radial >= 2, angular >= 4 and a
// multiple of 4).
DiskGrid build_disk_grid(int radial, int angular);

inline std::shared_ptr<const DiskGrid> make_disk_grid(double target_h) {
  return std::make_shared<const DiskGrid>(build_disk_grid(target_h));
}

struct BoundarySource {
  double angle = 0.0;      // center on the unit circle
  double strength = 1.0;   // g0
  double width = 0.15;     // arclength standard deviation
  double wavenumber = 1.0;
};

struct SensorLayout {
  std::vector<BoundarySource> sources;
  std::vector<double> detector_angles;

  int n_sources() const { return static_cast<int>(sources.size()); }
  int n_detectors() const { return static_cast<int>(detector_angles.size()); }
  // Distinct wavenumbers in order of first appearance.
  std::vector<double> wavenumbers() const;
};

// Equispaced sources and detectors on the unit circle. Wavenumbers are handed
// out in contiguous blocks, so (16, 32, {1, 2}) puts k=1 on sources 0..7.
SensorLayout make_sensor_layout(int n_sources, int n_detectors,
                                const std::vector<double>& wavenumbers,
                                double strength = 1.0, double width = 0.15);

// Gaussian-mollified point source in boundary arclength, normalized so that
// sum(g * boundary_weights) == strength. Entries are aligned with
// grid.boundary_nodes. Throws ResolutionError when width < 2 boundary spacings.
Eigen::VectorXd gaussian_boundary_source(const BoundarySource& src,
                                         const DiskGrid& grid);

// Trigonometric interpolation along the boundary ring at the given angles; one
// row per angle, one column per grid node.
Eigen::SparseMatrix<double> boundary_trace(const DiskGrid& grid,
                                           const std::vector<double>& angles);

// Spectral interpolation of a nodal field at points of the closed disk. Points
// outside are projected radially onto the unit circle.
Eigen::VectorXd interpolate(const DiskGrid& grid, const Eigen::VectorXd& field,
                            const std::vector<Eigen::Vector2d>& points);

}  // namespace nlborn
