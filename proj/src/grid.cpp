#include "nlborn/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nlborn/errors.hpp"
#include "nlborn/hash.hpp"

namespace nlborn {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

// Shortest arclength between two angles on the unit circle.
double arc_distance(double a, double b) {
  const double d = std::fabs(wrap_angle(a) - wrap_angle(b));
  return std::min(d, kTwoPi - d);
}

// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::fabs(dz) < 1e-16) break;
    }
    x[i] = 0.5 * (1.0 - z);
    w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
}

// Barycentric weights of Chebyshev points of the second kind.
double cheb_bary_weight(int k, int order) {
  const double s = (k % 2 == 0) ? 1.0 : -1.0;
  return (k == 0 || k == order) ? 0.5 * s : s;
}

// Lagrange cardinal values at x for the Chebyshev grid pts.
void cheb_cardinals(const std::vector<double>& pts, double x, std::vector<double>& out) {
  const int order = static_cast<int>(pts.size()) - 1;
  out.assign(pts.size(), 0.0);
  for (int k = 0; k <= order; ++k) {
    if (x == pts[k]) {
      out[k] = 1.0;
      return;
    }
  }
  double denom = 0.0;
  for (int k = 0; k <= order; ++k) {
    out[k] = cheb_bary_weight(k, order) / (x - pts[k]);
    denom += out[k];
  }
  for (double& v : out) v /= denom;
}

// Periodic cardinal function of an even number m of equispaced nodes.
double periodic_sinc(double x, int m) {
  x = std::remainder(x, kTwoPi);
  if (std::fabs(x) < 1e-14) return 1.0;
  // Exact zeros at the other nodes, so node angles give a pure selection.
  if (std::fabs(std::remainder(x, kTwoPi / m)) < 1e-14) return 0.0;
  return std::sin(0.5 * m * x) / (m * std::tan(0.5 * x));
}

}  // namespace

double DiskGrid::boundary_spacing() const {
  return kTwoPi / static_cast<double>(angular);
}

double DiskGrid::boundary_angle(int i) const {
  return kTwoPi * static_cast<double>(i) / static_cast<double>(angular);
}

std::uint64_t DiskGrid::fingerprint() const {
  Fnv1a h;
  h.update_value(radial);
  h.update_value(angular);
  for (const auto& p : nodes) {
    h.update_value(p.x());
    h.update_value(p.y());
  }
  return h.digest();
}

DiskGrid build_disk_grid(double target_h) {
  if (!(target_h > 0.0 && target_h <= 0.5)) {
    throw ParameterError("build_disk_grid: target_h must lie in (0, 0.5]");
  }
  // Spacing across the center is about pi / (2 radial), matching 2 pi / angular.
  const int radial = std::max(2, static_cast<int>(std::ceil(kPi / (2.0 * target_h) - 1e-9)));
  return build_disk_grid(radial, 4 * radial);
}

DiskGrid build_disk_grid(int radial, int angular) {
  if (radial < 2) throw ParameterError("build_disk_grid: need at least two rings");
  if (angular < 4 || angular % 4 != 0) {
    throw ParameterError("build_disk_grid: angular count must be a positive multiple of 4");
  }
  DiskGrid g;
  g.radial = radial;
  g.angular = angular;
  g.h = kTwoPi / angular;
  const int order = g.cheb_order();
  for (int k = 0; k <= order; ++k) g.cheb_points.push_back(std::cos(kPi * k / order));
  g.radii.assign(g.cheb_points.begin(), g.cheb_points.begin() + radial);

  // a_k = integral over [0, 1] of l_k(x) x dx, exact for the interpolant.
  std::vector<double> gx, gw, card;
  gauss_legendre(order + 2, gx, gw);
  std::vector<double> a(order + 1, 0.0);
  for (std::size_t q = 0; q < gx.size(); ++q) {
    cheb_cardinals(g.cheb_points, gx[q], card);
    for (int k = 0; k <= order; ++k) a[k] += gw[q] * gx[q] * card[k];
  }

  const int n = radial * angular;
  g.nodes.reserve(n);
  g.interior_mask.assign(n, 1);
  g.quad_weights.resize(n);
  for (int j = 0; j < radial; ++j) {
    const double ring_weight = g.h * (a[j] + a[order - j]);
    for (int p = 0; p < angular; ++p) {
      const double t = g.h * p;
      g.nodes.emplace_back(g.radii[j] * std::cos(t), g.radii[j] * std::sin(t));
      g.quad_weights[g.index(j, p)] = ring_weight;
    }
  }
  g.boundary_weights = Eigen::VectorXd::Constant(angular, g.h);
  for (int p = 0; p < angular; ++p) {
    g.interior_mask[p] = 0;
    g.boundary_nodes.push_back(p);
    g.boundary_normals.push_back(g.nodes[p]);
  }
  return g;
}

std::vector<double> SensorLayout::wavenumbers() const {
  std::vector<double> ks;
  for (const auto& s : sources) {
    if (std::find(ks.begin(), ks.end(), s.wavenumber) == ks.end()) {
      ks.push_back(s.wavenumber);
    }
  }
  return ks;
}

SensorLayout make_sensor_layout(int n_sources, int n_detectors,
                                const std::vector<double>& wavenumbers,
                                double strength, double width) {
  if (n_sources < 1 || n_detectors < 1) {
    throw ParameterError("make_sensor_layout: counts must be positive");
  }
  if (wavenumbers.empty()) {
    throw ParameterError("make_sensor_layout: need at least one wavenumber");
  }
  if (static_cast<int>(wavenumbers.size()) > n_sources) {
    throw ParameterError("make_sensor_layout: more wavenumbers than sources");
  }
  if (strength < 0.0 || !(width > 0.0)) {
    throw ParameterError("make_sensor_layout: need strength >= 0 and width > 0");
  }
  SensorLayout layout;
  const auto n_k = static_cast<long>(wavenumbers.size());
  for (int i = 0; i < n_sources; ++i) {
    BoundarySource s;
    s.angle = kTwoPi * i / n_sources;
    s.strength = strength;
    s.width = width;
    s.wavenumber = wavenumbers[static_cast<long>(i) * n_k / n_sources];
    layout.sources.push_back(s);
  }
  for (int j = 0; j < n_detectors; ++j) {
    layout.detector_angles.push_back(kTwoPi * j / n_detectors);
  }
  return layout;
}

Eigen::VectorXd gaussian_boundary_source(const BoundarySource& src,
                                         const DiskGrid& grid) {
  if (src.strength < 0.0 || !(src.width > 0.0)) {
    throw ParameterError("gaussian_boundary_source: need g0 >= 0 and width > 0");
  }
  if (src.width < 2.0 * grid.boundary_spacing()) {
    throw ResolutionError(
        "gaussian_boundary_source: width is below two boundary spacings");
  }
  const int n_b = grid.boundary_size();
  Eigen::VectorXd shape(n_b);
  for (int i = 0; i < n_b; ++i) {
    const double d = arc_distance(grid.boundary_angle(i), src.angle);
    shape[i] = std::exp(-0.5 * d * d / (src.width * src.width));
  }
  shape /= shape.dot(grid.boundary_weights);
  return src.strength * shape;
}

Eigen::SparseMatrix<double> boundary_trace(const DiskGrid& grid,
                                           const std::vector<double>& angles) {
  std::vector<Eigen::Triplet<double>> entries;
  for (std::size_t a = 0; a < angles.size(); ++a) {
    for (int p = 0; p < grid.angular; ++p) {
      const double v = periodic_sinc(angles[a] - grid.boundary_angle(p), grid.angular);
      if (v != 0.0) entries.emplace_back(static_cast<int>(a), grid.boundary_nodes[p], v);
    }
  }
  Eigen::SparseMatrix<double> r(static_cast<long>(angles.size()), grid.size());
  r.setFromTriplets(entries.begin(), entries.end());
  r.makeCompressed();
  return r;
}

Eigen::VectorXd interpolate(const DiskGrid& grid, const Eigen::VectorXd& field,
                            const std::vector<Eigen::Vector2d>& points) {
  if (field.size() != grid.size()) throw ShapeError("interpolate: field length mismatch");
  const int order = grid.cheb_order();
  std::vector<double> kern_pos(grid.angular), kern_neg(grid.angular), line(order + 1), card;
  Eigen::VectorXd out(static_cast<long>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double r = std::min(1.0, points[i].norm());
    const double t = r > 0.0 ? std::atan2(points[i].y(), points[i].x()) : 0.0;
    for (int p = 0; p < grid.angular; ++p) {
      kern_pos[p] = periodic_sinc(t - grid.h * p, grid.angular);
      kern_neg[p] = periodic_sinc(t + kPi - grid.h * p, grid.angular);
    }
    // Values along the diameter through the point: ring j at +r_j, and the
    // opposite side at -r_j.
    for (int j = 0; j < grid.radial; ++j) {
      double vp = 0.0, vn = 0.0;
      for (int p = 0; p < grid.angular; ++p) {
        const double f = field[grid.index(j, p)];
        vp += kern_pos[p] * f;
        vn += kern_neg[p] * f;
      }
      line[j] = vp;
      line[order - j] = vn;
    }
    cheb_cardinals(grid.cheb_points, r, card);
    double v = 0.0;
    for (int k = 0; k <= order; ++k) v += card[k] * line[k];
    out[static_cast<long>(i)] = v;
  }
  return out;
}

}  // namespace nlborn
