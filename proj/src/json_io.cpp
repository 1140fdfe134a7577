#include "neoface/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace neoface {

using nlohmann::json;

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_json_file(const json& doc, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw Error("write failed for " + path.string());
}

double number_from_json(const json& v, const char* what) {
    if (!v.is_number()) throw ParseError(std::string(what) + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ParseError(std::string(what) + " must be finite");
    return d;
}

json point_to_json(const Point& p) { return json::array({p.x, p.y}); }

Point point_from_json(const json& v) {
    if (!v.is_array() || v.size() != 2) throw ParseError("point must be a [x, y] array");
    return {number_from_json(v[0], "x"), number_from_json(v[1], "y")};
}

json bbox_to_json_object(const BBox& b) {
    return {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}};
}

BBox bbox_from_json_object(const json& v) {
    if (!v.is_object()) throw ParseError("box must be an object with x, y, w, h");
    auto field = [&](const char* k) {
        auto it = v.find(k);
        if (it == v.end()) throw ParseError(std::string("box is missing \"") + k + "\"");
        return number_from_json(*it, k);
    };
    return {field("x"), field("y"), field("w"), field("h")};
}

json bbox_to_json_array(const BBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

BBox bbox_from_json_array(const json& v) {
    if (!v.is_array() || v.size() != 4) throw ParseError("bbox must be a [x, y, w, h] array");
    return {number_from_json(v[0], "x"), number_from_json(v[1], "y"), number_from_json(v[2], "w"),
            number_from_json(v[3], "h")};
}

json landmarks_to_json(const LandmarkSet& s) {
    json out = json::object();
    for (LandmarkName n : kAllLandmarks) {
        if (const auto& p = s[n]) out[std::string(to_string(n))] = point_to_json(*p);
    }
    return out;
}

LandmarkSet landmarks_from_json(const json& v) {
    if (!v.is_object()) throw ParseError("landmarks must be an object");
    LandmarkSet s;
    for (const auto& [key, value] : v.items()) {
        auto name = parse_landmark_name(key);
        if (!name) throw ParseError("unknown landmark name \"" + key + "\"");
        s.set(*name, point_from_json(value));
    }
    return s;
}

json landmark_names_to_json(const std::vector<LandmarkName>& names) {
    json out = json::array();
    for (LandmarkName n : names) out.push_back(std::string(to_string(n)));
    return out;
}

std::vector<LandmarkName> landmark_names_from_json(const json& v) {
    if (!v.is_array()) throw ParseError("landmark vocabulary must be an array of names");
    std::vector<LandmarkName> out;
    for (const json& e : v) {
        if (!e.is_string()) throw ParseError("landmark names must be strings");
        auto name = parse_landmark_name(e.get<std::string>());
        if (!name) throw ParseError("unknown landmark name \"" + e.get<std::string>() + "\"");
        if (std::find(out.begin(), out.end(), *name) == out.end()) out.push_back(*name);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace neoface
