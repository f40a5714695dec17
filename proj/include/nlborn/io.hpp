#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "nlborn/bounds.hpp"
#include "nlborn/forward.hpp"
#include "nlborn/grid.hpp"
#include "nlborn/phantom.hpp"

namespace nlborn {

using Json = nlohmann::json;

inline constexpr int kGridFormatVersion = 1;

// Shortest decimal text that round-trips the double.
std::string format_double(double v);
// Finite values as numbers; infinities and NaN as the strings "inf", "-inf", "nan".
Json json_number(double v);
double number_from_json(const Json& j);

// Writes to a sibling temporary file and renames it over path. Creates missing
// parent directories.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

// node,x,y,value per row; one value column per entry of columns when given.
std::string field_csv(const DiskGrid& grid, const Eigen::VectorXd& field);
std::string fields_csv(const DiskGrid& grid, const std::vector<std::string>& names,
                       const std::vector<Eigen::VectorXd>& columns);
Eigen::VectorXd read_field_csv(const std::filesystem::path& path);

// Header "source,d0,d1,..", one row per source.
std::string matrix_csv(const Eigen::MatrixXd& m, const std::string& row_label = "source",
                       const std::string& col_prefix = "d");
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

// Versioned grid document: parameters, node coordinates, weights, boundary
// ordering and normals, and optionally the sensor layout.
Json grid_to_json(const DiskGrid& grid, const SensorLayout* layout = nullptr);
// Rebuilds the grid from its parameters and checks the stored fingerprint.
DiskGrid grid_from_json(const Json& j);

Json layout_to_json(const SensorLayout& layout);

Json bounds_to_json(const BoundsReport& report);

Json phantom_to_json(const Phantom& p);
Phantom phantom_from_json(const Json& j);
Json catalog_to_json(const std::map<std::string, Phantom>& catalog, int version);
std::map<std::string, Phantom> catalog_from_json(const Json& j);

}  // namespace nlborn
