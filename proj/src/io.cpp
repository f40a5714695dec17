#include "nlborn/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "nlborn/errors.hpp"
#include "nlborn/hash.hpp"

namespace nlborn {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Json json_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (s == "nan") return NAN;
  }
  throw ParameterError("expected a number, got " + j.dump());
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw Error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string field_csv(const DiskGrid& grid, const Eigen::VectorXd& field) {
  return fields_csv(grid, {"value"}, {field});
}

std::string fields_csv(const DiskGrid& grid, const std::vector<std::string>& names,
                       const std::vector<Eigen::VectorXd>& columns) {
  if (names.size() != columns.size()) throw ShapeError("fields_csv: names and columns differ");
  for (const auto& c : columns) {
    if (c.size() != grid.size()) throw ShapeError("fields_csv: column length mismatch");
  }
  std::string out = "node,x,y";
  for (const auto& n : names) out += "," + n;
  out += "\n";
  for (int i = 0; i < grid.size(); ++i) {
    const auto& x = grid.nodes[static_cast<std::size_t>(i)];
    out += std::to_string(i) + "," + format_double(x.x()) + "," + format_double(x.y());
    for (const auto& c : columns) out += "," + format_double(c[i]);
    out += "\n";
  }
  return out;
}

namespace {

std::vector<std::vector<double>> parse_csv(const fs::path& path, std::size_t skip_cols) {
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ls, cell, ',')) {
      if (col++ < skip_cols) continue;
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParameterError("malformed number '" + cell + "' in " + path.string());
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Eigen::VectorXd read_field_csv(const fs::path& path) {
  const auto rows = parse_csv(path, 3);
  Eigen::VectorXd v(static_cast<long>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].empty()) throw ShapeError("missing value column in " + path.string());
    v[static_cast<long>(i)] = rows[i][0];
  }
  return v;
}

std::string matrix_csv(const Eigen::MatrixXd& m, const std::string& row_label,
                       const std::string& col_prefix) {
  std::string out = row_label;
  for (long c = 0; c < m.cols(); ++c) out += "," + col_prefix + std::to_string(c);
  out += "\n";
  for (long r = 0; r < m.rows(); ++r) {
    out += std::to_string(r);
    for (long c = 0; c < m.cols(); ++c) out += "," + format_double(m(r, c));
    out += "\n";
  }
  return out;
}

Eigen::MatrixXd read_matrix_csv(const fs::path& path) {
  const auto rows = parse_csv(path, 1);
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<long>(rows.size()), static_cast<long>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw ShapeError("ragged rows in " + path.string());
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<long>(r), static_cast<long>(c)) = rows[r][c];
    }
  }
  return m;
}

Json layout_to_json(const SensorLayout& layout) {
  Json src = Json::array();
  for (const auto& s : layout.sources) {
    src.push_back({{"angle", s.angle}, {"strength", s.strength}, {"width", s.width},
                   {"wavenumber", s.wavenumber}});
  }
  return {{"sources", src}, {"detector_angles", layout.detector_angles}};
}

Json grid_to_json(const DiskGrid& grid, const SensorLayout* layout) {
  Json j;
  j["format"] = "nlborn-grid";
  j["version"] = kGridFormatVersion;
  j["radial"] = grid.radial;
  j["angular"] = grid.angular;
  j["h"] = grid.h;
  j["fingerprint"] = hex_digest(grid.fingerprint());
  Json nodes = Json::array();
  for (const auto& x : grid.nodes) nodes.push_back({x.x(), x.y()});
  j["nodes"] = nodes;
  j["quad_weights"] = std::vector<double>(grid.quad_weights.begin(), grid.quad_weights.end());
  j["boundary_nodes"] = grid.boundary_nodes;
  Json normals = Json::array();
  for (const auto& n : grid.boundary_normals) normals.push_back({n.x(), n.y()});
  j["boundary_normals"] = normals;
  j["boundary_weights"] =
      std::vector<double>(grid.boundary_weights.begin(), grid.boundary_weights.end());
  if (layout) j["layout"] = layout_to_json(*layout);
  return j;
}

DiskGrid grid_from_json(const Json& j) {
  if (j.value("format", "") != "nlborn-grid") throw ParameterError("not a grid document");
  if (j.at("version").get<int>() != kGridFormatVersion) {
    throw ParameterError("unsupported grid document version");
  }
  DiskGrid g = build_disk_grid(j.at("radial").get<int>(), j.at("angular").get<int>());
  if (hex_digest(g.fingerprint()) != j.at("fingerprint").get<std::string>()) {
    throw ConfigMismatchError("grid document fingerprint does not match its parameters");
  }
  return g;
}

Json bounds_to_json(const BoundsReport& r) {
  Json j;
  j["degrees"] = r.degrees;
  j["L"] = r.L;
  Json mus = Json::array();
  for (const auto& [k, mu] : r.mu_per_wavenumber) mus.push_back({{"k", k}, {"mu", json_number(mu)}});
  j["mu_per_wavenumber"] = mus;
  j["mu"] = json_number(r.mu);
  j["nu0"] = json_number(r.nu0);
  j["nu"] = json_number(r.nu);
  j["K"] = json_number(r.K);
  j["forward_radius"] = json_number(r.forward_radius);
  j["k1_norm"] = json_number(r.k1_norm);
  j["coupling"] = json_number(r.coupling);
  j["C"] = json_number(r.C);
  j["r"] = json_number(r.r);
  j["M_threshold"] = json_number(r.M_threshold);
  if (r.M) j["M"] = json_number(*r.M);
  if (r.residual) j["residual"] = json_number(*r.residual);
  if (r.error) {
    j["error_bound"] = {{"hypothesis_holds", r.error->hypothesis_holds},
                        {"threshold", json_number(r.error->threshold)},
                        {"margin", json_number(r.error->margin)},
                        {"prefactor", json_number(r.error->prefactor)},
                        {"bound", json_number(r.error->bound)}};
  }
  if (r.data_norm) j["data_norm"] = json_number(*r.data_norm);
  if (r.inverse_hypothesis) j["inverse_hypothesis"] = *r.inverse_hypothesis;
  return j;
}

Json phantom_to_json(const Phantom& p) {
  Json g = Json::array();
  for (const auto& b : p.gaussians) {
    g.push_back({{"center", {b.center.x(), b.center.y()}}, {"width", b.width},
                 {"amplitude", b.amplitude}});
  }
  Json d = Json::array();
  for (const auto& b : p.disks) {
    d.push_back({{"center", {b.center.x(), b.center.y()}}, {"radius", b.radius},
                 {"amplitude", b.amplitude}});
  }
  return {{"name", p.name},         {"kind", p.kind},   {"background", p.background},
          {"gaussians", g},         {"disks", d},       {"allow_negative", p.allow_negative}};
}

Phantom phantom_from_json(const Json& j) {
  static const std::vector<std::string> kinds = {"three_gaussians", "disk",
                                                 "disk_plus_gaussian", "custom"};
  Phantom p;
  p.name = j.value("name", std::string("custom"));
  p.kind = j.value("kind", std::string("custom"));
  if (std::find(kinds.begin(), kinds.end(), p.kind) == kinds.end()) {
    throw ParameterError("unknown phantom kind '" + p.kind + "'");
  }
  p.background = j.value("background", 1.0);
  p.allow_negative = j.value("allow_negative", false);
  auto center = [](const Json& c) {
    if (!c.is_array() || c.size() != 2) throw ParameterError("phantom center must be [x, y]");
    return Eigen::Vector2d(c[0].get<double>(), c[1].get<double>());
  };
  for (const auto& b : j.value("gaussians", Json::array())) {
    p.gaussians.push_back({center(b.at("center")), b.at("width").get<double>(),
                           b.at("amplitude").get<double>()});
  }
  for (const auto& b : j.value("disks", Json::array())) {
    p.disks.push_back({center(b.at("center")), b.at("radius").get<double>(),
                       b.at("amplitude").get<double>()});
  }
  p.validate();
  return p;
}

Json catalog_to_json(const std::map<std::string, Phantom>& catalog, int version) {
  Json ph = Json::object();
  for (const auto& [name, p] : catalog) ph[name] = phantom_to_json(p);
  return {{"format", "nlborn-phantoms"}, {"version", version}, {"phantoms", ph}};
}

std::map<std::string, Phantom> catalog_from_json(const Json& j) {
  if (j.value("format", "") != "nlborn-phantoms") throw ParameterError("not a phantom catalog");
  std::map<std::string, Phantom> out;
  for (const auto& [name, pj] : j.at("phantoms").items()) {
    Phantom p = phantom_from_json(pj);
    p.name = name;
    out[name] = p;
  }
  return out;
}

}  // namespace nlborn
