#include "nlborn/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "nlborn/errors.hpp"

namespace nlborn {

double Phantom::value(const Eigen::Vector2d& x) const {
  double v = background;
  for (const auto& g : gaussians) {
    v += g.amplitude * std::exp(-0.5 * (x - g.center).squaredNorm() / (g.width * g.width));
  }
  for (const auto& d : disks) {
    if ((x - d.center).norm() <= d.radius) v += d.amplitude;
  }
  return v;
}

void Phantom::validate() const {
  if (!std::isfinite(background)) throw ParameterError("phantom " + name + ": background is not finite");
  for (const auto& g : gaussians) {
    if (g.center.norm() >= 1.0) throw ParameterError("phantom " + name + ": Gaussian center outside the disk");
    if (!(g.width > 0.0) || !std::isfinite(g.amplitude)) {
      throw ParameterError("phantom " + name + ": Gaussian needs width > 0 and a finite amplitude");
    }
  }
  for (const auto& d : disks) {
    if (!(d.radius > 0.0) || d.center.norm() + d.radius > 1.0) {
      throw ParameterError("phantom " + name + ": disk inclusion must lie inside the unit disk");
    }
    if (!std::isfinite(d.amplitude)) throw ParameterError("phantom " + name + ": disk amplitude is not finite");
  }
  if (!allow_negative) {
    // Negative parts can only come from the background or negative amplitudes.
    double low = background;
    for (const auto& g : gaussians) low += std::min(0.0, g.amplitude);
    for (const auto& d : disks) low += std::min(0.0, d.amplitude);
    if (low < 0.0) throw ParameterError("phantom " + name + ": negative values are not allowed");
  }
}

std::optional<double> Phantom::nominal_contrast() const {
  if (background == 0.0) return std::nullopt;
  double peak = background;
  for (const auto& g : gaussians) peak = std::max(peak, value(g.center));
  for (const auto& d : disks) peak = std::max(peak, value(d.center));
  return peak / background;
}

namespace {

std::map<std::string, Phantom> make_catalog() {
  std::map<std::string, Phantom> c;
  {
    Phantom p;
    p.name = p.kind = "three_gaussians";
    p.background = 1.0;
    for (const auto& ctr : {Eigen::Vector2d(-0.4, 0.3), Eigen::Vector2d(0.4, 0.3),
                            Eigen::Vector2d(0.0, -0.45)}) {
      p.gaussians.push_back({ctr, 0.15, 19.0});
    }
    c[p.name] = p;
  }
  {
    Phantom p;
    p.name = p.kind = "disk";
    p.background = 1.0;
    p.disks.push_back({Eigen::Vector2d(0.1, 0.1), 0.4, 4.0});
    c[p.name] = p;
  }
  {
    Phantom p;
    p.name = p.kind = "disk_plus_gaussian";
    p.background = 1.0;
    p.disks.push_back({Eigen::Vector2d(-0.4, 0.0), 0.3, 4.0});
    p.gaussians.push_back({Eigen::Vector2d(0.4, 0.0), 0.15, 4.0});
    c[p.name] = p;
  }
  {
    Phantom p;
    p.name = "zero";
    p.kind = "custom";
    p.background = 0.0;
    c[p.name] = p;
  }
  return c;
}

}  // namespace

const std::map<std::string, Phantom>& builtin_phantoms() {
  static const std::map<std::string, Phantom> catalog = make_catalog();
  return catalog;
}

int phantom_catalog_version() { return 1; }

Phantom find_phantom(const std::string& name) {
  const auto& c = builtin_phantoms();
  auto it = c.find(name);
  if (it == c.end()) throw ParameterError("unknown phantom '" + name + "'");
  return it->second;
}

Field sample_phantom(const Phantom& p, const DiskGrid& grid) {
  p.validate();
  Field f(grid.size());
  for (int i = 0; i < grid.size(); ++i) f[i] = p.value(grid.nodes[static_cast<std::size_t>(i)]);
  return f;
}

Nonlinearity build_phantom(const Phantom& p, const DiskGrid& grid,
                           const std::vector<int>& degrees) {
  validate_degrees(degrees);
  const Field f = sample_phantom(p, grid);
  Nonlinearity nl = Nonlinearity::zero(degrees, grid.size());
  for (std::size_t d = 0; d < degrees.size(); ++d) nl.block(static_cast<int>(d)) = f;
  return nl;
}

}  // namespace nlborn
