#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nlborn/forward.hpp"
#include "nlborn/grid.hpp"

namespace nlborn {

struct GaussianBump {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double width = 0.15;  // standard deviation
  double amplitude = 0.0;
};

struct DiskInclusion {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.3;
  double amplitude = 0.0;
};

/// Coefficient phantom: background + sum of Gaussian bumps + sum of disk
/// indicators (closed disks).
struct Phantom {
  std::string name;
  std::string kind;  // three_gaussians, disk, disk_plus_gaussian or custom
  double background = 1.0;
  std::vector<GaussianBump> gaussians;
  std::vector<DiskInclusion> disks;
  bool allow_negative = false;

  double value(const Eigen::Vector2d& x) const;
  // Throws ParameterError for geometry outside the disk, nonpositive widths,
  // or negative values when they are not allowed.
  void validate() const;
  // Peak value over bump centers and disk interiors divided by the background;
  // empty for a zero background.
  std::optional<double> nominal_contrast() const;
};

// Built-in catalog; identical to share/phantoms.json.
const std::map<std::string, Phantom>& builtin_phantoms();
int phantom_catalog_version();

// Looks a name up in the built-in catalog; throws ParameterError when unknown.
Phantom find_phantom(const std::string& name);

// Samples p at the grid nodes.
Field sample_phantom(const Phantom& p, const DiskGrid& grid);

// One copy of the sampled phantom per degree block.
Nonlinearity build_phantom(const Phantom& p, const DiskGrid& grid,
                           const std::vector<int>& degrees = {3});

}  // namespace nlborn
