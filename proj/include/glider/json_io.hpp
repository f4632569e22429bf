#pragma once

// JSON conversions shared by the file formats. Doubles are emitted by
// nlohmann::json with round-trip precision.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "glider/dataset.hpp"

namespace glider {

using Json = nlohmann::json;

Json to_json(const GeometrySettings& g);
GeometrySettings geometry_from_json(const Json& j);

Json to_json(const FlowConditions& f);
FlowConditions flow_from_json(const Json& j);

Json to_json(const InputNormalization& n);
InputNormalization normalization_from_json(const Json& j);

Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);

// Parses a whole file; syntax errors become ParseError with a 1-based line.
Json read_json_file(const std::filesystem::path& path);

// Writes `text` to a sibling temporary file and renames it over `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace glider
