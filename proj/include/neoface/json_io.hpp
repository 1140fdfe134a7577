#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "neoface/datamodel.hpp"
#include "neoface/geometry.hpp"

namespace neoface {

/// Throws ParseError if the file cannot be read or is not valid JSON.
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Pretty-printed with a two-space indent and a trailing newline. Parent
/// directories are created as needed.
void write_json_file(const nlohmann::json& doc, const std::filesystem::path& path);

// Helpers below throw ParseError on shape or type mismatches.

double number_from_json(const nlohmann::json& v, const char* what);

nlohmann::json point_to_json(const Point& p);
Point point_from_json(const nlohmann::json& v);

/// {"x","y","w","h"}
nlohmann::json bbox_to_json_object(const BBox& b);
BBox bbox_from_json_object(const nlohmann::json& v);

/// [x, y, w, h]
nlohmann::json bbox_to_json_array(const BBox& b);
BBox bbox_from_json_array(const nlohmann::json& v);

/// {"right_eye": [x, y], ...}; unknown names are rejected.
nlohmann::json landmarks_to_json(const LandmarkSet& s);
LandmarkSet landmarks_from_json(const nlohmann::json& v);

nlohmann::json landmark_names_to_json(const std::vector<LandmarkName>& names);
std::vector<LandmarkName> landmark_names_from_json(const nlohmann::json& v);

}  // namespace neoface
