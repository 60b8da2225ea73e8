#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "kconv/space.hpp"
#include "kconv/verify.hpp"

namespace kconv {

/// Load a config file into json. Dispatch is by extension: .json parses
/// directly; .toml goes through a small subset parser ([table] headers,
/// key = value with strings, booleans, numbers and nested arrays).
nlohmann::json load_config(const std::string& path);

nlohmann::json parse_toml_subset(const std::string& text);

// CSV matrices: row-major, headerless
std::vector<double> read_csv_values(const std::string& path, int* rows = nullptr, int* cols = nullptr);
void write_csv_matrix(const std::string& path, const std::vector<double>& values, int cols);

/// Build a space from the "space" section: backend grid (dimension, bounds,
/// spacing) or graph (dist_matrix_path, weights_path).
MetricMeasureSpace space_from_config(const nlohmann::json& doc);

/// Potential field from the "potential" section: quadratic (0.5*lambda*|x|^2),
/// linear (<a, x>), or custom CSV values.
ScalarField potential_from_config(const MetricMeasureSpace& space, const nlohmann::json& doc);

/// Density from a measure spec: {"kind": "bump", center, width} or
/// {"kind": "csv", "path": ...} (raw values, normalized).
Density density_from_config(const MetricMeasureSpace& space, const nlohmann::json& spec);

Scenario scenario_from_config(const nlohmann::json& doc);

/// K values requested by the config ("K" may be a number or an array).
std::vector<double> k_values_from_config(const nlohmann::json& doc);

}  // namespace kconv
