#include "neoface/backends.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "neoface/json_io.hpp"
#include "neoface/rng.hpp"

namespace neoface {

using nlohmann::json;

std::optional<Detection> select_best(std::span<const Detection> detections,
                                     double conf_threshold) {
    const Detection* best = nullptr;
    for (const Detection& d : detections) {
        if (d.confidence < conf_threshold) continue;
        if (best == nullptr || d.confidence > best->confidence) best = &d;
    }
    if (best == nullptr) return std::nullopt;
    return *best;
}

std::string_view to_string(BackendKind k) noexcept {
    switch (k) {
        case BackendKind::Mock: return "mock";
        case BackendKind::File: return "file";
        case BackendKind::Subprocess: return "subprocess";
    }
    return "mock";
}

// ---------------------------------------------------------------------------
// Wire format

json detection_to_json(const Detection& d) {
    return {{"bbox", bbox_to_json_array(d.bbox)},
            {"confidence", d.confidence},
            {"landmarks", landmarks_to_json(d.landmarks)}};
}

Detection detection_from_json(const json& v) {
    if (!v.is_object()) throw ParseError("detection must be an object");
    Detection d;
    auto bbox = v.find("bbox");
    if (bbox == v.end()) throw ParseError("detection is missing \"bbox\"");
    d.bbox = bbox_from_json_array(*bbox);
    if (!valid(d.bbox)) throw ParseError("detection bbox must have positive width and height");
    auto conf = v.find("confidence");
    if (conf == v.end()) throw ParseError("detection is missing \"confidence\"");
    d.confidence = number_from_json(*conf, "confidence");
    if (d.confidence < 0.0 || d.confidence > 1.0) {
        throw ParseError("detection confidence must lie in [0, 1]");
    }
    if (auto lm = v.find("landmarks"); lm != v.end() && !lm->is_null()) {
        d.landmarks = landmarks_from_json(*lm);
    }
    return d;
}

json detections_to_json(std::span<const Detection> ds) {
    json out = json::array();
    for (const Detection& d : ds) out.push_back(detection_to_json(d));
    return out;
}

std::vector<Detection> detections_from_json(const json& v) {
    if (!v.is_array()) throw ParseError("detections must be an array");
    std::vector<Detection> out;
    out.reserve(v.size());
    for (const json& e : v) out.push_back(detection_from_json(e));
    return out;
}

// ---------------------------------------------------------------------------
// Mock

void validate(const MockProfile& p) {
    for (const auto& [o, c] : p.confidence) {
        if (!(c >= 0.0 && c <= 1.0)) {
            throw ConfigError("mock confidence for " + std::string(to_string(o)) +
                              " must lie in [0, 1]");
        }
    }
    if (!(p.bbox_noise >= 0.0) || !(p.landmark_noise >= 0.0)) {
        throw ConfigError("mock noise must be non-negative");
    }
    if (!(p.miss_probability >= 0.0 && p.miss_probability <= 1.0)) {
        throw ConfigError("mock miss probability must lie in [0, 1]");
    }
}

MockProfile mock_profile_from_json(const json& v) {
    if (!v.is_object()) throw ConfigError("mock profile must be an object");
    MockProfile p;
    try {
        if (auto it = v.find("confidence"); it != v.end()) {
            if (it->is_number()) {
                for (Orientation o : kAllOrientations) p.confidence[o] = it->get<double>();
            } else if (it->is_object()) {
                p.confidence.clear();
                for (const auto& [key, value] : it->items()) {
                    auto o = parse_orientation(key);
                    if (!o) throw ConfigError("unknown orientation \"" + key + "\"");
                    p.confidence[*o] = number_from_json(value, "confidence");
                }
            } else {
                throw ConfigError("mock confidence must be a number or an orientation table");
            }
        }
        if (auto it = v.find("bbox_noise"); it != v.end()) {
            p.bbox_noise = number_from_json(*it, "bbox_noise");
        }
        if (auto it = v.find("landmark_noise"); it != v.end()) {
            p.landmark_noise = number_from_json(*it, "landmark_noise");
        }
        if (auto it = v.find("miss_probability"); it != v.end()) {
            p.miss_probability = number_from_json(*it, "miss_probability");
        }
        if (auto it = v.find("seed"); it != v.end()) p.seed = it->get<std::uint64_t>();
        if (auto it = v.find("landmarks"); it != v.end()) {
            p.landmark_names = landmark_names_from_json(*it);
        }
        if (auto it = v.find("upright"); it != v.end()) {
            for (const auto& [id, value] : it->items()) {
                auto o = value.is_string() ? parse_orientation(value.get<std::string>())
                                           : std::nullopt;
                if (!o) throw ConfigError("upright orientation for '" + id + "' must be R0..R270");
                p.upright[id] = *o;
            }
        }
    } catch (const ParseError& e) {
        throw ConfigError(std::string("mock profile: ") + e.what());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("mock profile: ") + e.what());
    }
    validate(p);
    return p;
}

MockBackend::MockBackend(std::string name, MockProfile profile,
                         std::shared_ptr<const Dataset> truth)
    : profile_(std::move(profile)), truth_(std::move(truth)) {
    validate(profile_);
    if (!truth_) throw ConfigError("mock backend '" + name + "' needs ground truth");
    descriptor_ = {std::move(name), profile_.landmark_names, BackendKind::Mock};
}

std::vector<Detection> MockBackend::detect(const ImageRef& image) {
    const FaceAnnotation* gt = truth_->find(image.image_id);
    if (gt == nullptr) {
        throw BackendError(BackendError::Kind::UnknownImage,
                           descriptor_.name + ": no ground truth for '" + image.image_id + "'");
    }
    const FrameDims frame = rotated_dims(gt->dims, image.orientation);
    if (image.dims != frame) {
        throw BackendError(BackendError::Kind::Protocol,
                           descriptor_.name + ": frame size mismatch for '" + image.image_id + "'");
    }

    Orientation upright = Orientation::R0;
    if (auto it = profile_.upright.find(image.image_id); it != profile_.upright.end()) {
        upright = it->second;
    }
    const Orientation turned = compose(image.orientation, inverse(upright));
    double confidence = 0.0;
    if (auto it = profile_.confidence.find(turned); it != profile_.confidence.end()) {
        confidence = it->second;
    }

    Rng rng(combine_seed(combine_seed(profile_.seed, hash_string(image.image_id)),
                         static_cast<std::uint64_t>(image.orientation)));
    // Fixed draw order so every field sees the same stream regardless of
    // which branches are taken.
    const bool missed = rng.bernoulli(profile_.miss_probability);
    std::array<double, 4> box_jitter{};
    for (double& j : box_jitter) j = rng.uniform(-1.0, 1.0) * profile_.bbox_noise;
    std::array<std::array<double, 2>, kLandmarkCount> lm_jitter{};
    for (auto& j : lm_jitter) {
        j[0] = rng.uniform(-1.0, 1.0) * profile_.landmark_noise;
        j[1] = rng.uniform(-1.0, 1.0) * profile_.landmark_noise;
    }
    if (missed || confidence <= 0.0) return {};

    Detection d;
    d.confidence = confidence;
    const BBox exact = rotate_bbox(gt->face, gt->dims, image.orientation);
    d.bbox = exact;
    if (profile_.bbox_noise > 0.0) {
        const BBox noisy{exact.x + box_jitter[0], exact.y + box_jitter[1],
                         std::max(exact.w + box_jitter[2], 1e-3),
                         std::max(exact.h + box_jitter[3], 1e-3)};
        d.bbox = clip_to_frame(noisy, frame).value_or(exact);
    }
    for (LandmarkName n : profile_.landmark_names) {
        const auto& p = gt->landmarks[n];
        if (!p) continue;
        Point q = rotate_point(*p, gt->dims, image.orientation);
        if (profile_.landmark_noise > 0.0) {
            const auto& j = lm_jitter[static_cast<std::size_t>(n)];
            q = clamp_to_frame({q.x + j[0], q.y + j[1]}, frame);
        }
        d.landmarks.set(n, q);
    }
    return {d};
}

// ---------------------------------------------------------------------------
// Precomputed file

FileBackend::FileBackend(const json& doc) {
    if (!doc.is_object()) throw ParseError("detections file must be a JSON object");
    descriptor_.kind = BackendKind::File;
    auto name = doc.find("backend");
    if (name == doc.end() || !name->is_string()) {
        throw ParseError("detections file needs a \"backend\" name");
    }
    descriptor_.name = name->get<std::string>();
    if (auto lm = doc.find("landmarks"); lm != doc.end()) {
        descriptor_.landmark_names = landmark_names_from_json(*lm);
    }
    auto results = doc.find("results");
    if (results == doc.end() || !results->is_array()) {
        throw ParseError("detections file needs a \"results\" array");
    }
    for (std::size_t i = 0; i < results->size(); ++i) {
        const json& r = (*results)[i];
        const std::string where = "results[" + std::to_string(i) + "]";
        if (!r.is_object()) throw ParseError(where + " must be an object");
        auto id = r.find("image_id");
        if (id == r.end() || !id->is_string()) throw ParseError(where + " needs \"image_id\"");
        Orientation o = Orientation::R0;
        if (auto it = r.find("orientation"); it != r.end()) {
            auto parsed = it->is_string() ? parse_orientation(it->get<std::string>()) : std::nullopt;
            if (!parsed) throw ParseError(where + ": orientation must be one of R0, R90, R180, R270");
            o = *parsed;
        }
        auto dets = r.find("detections");
        if (dets == r.end()) throw ParseError(where + " needs \"detections\"");
        std::vector<Detection> parsed;
        try {
            parsed = detections_from_json(*dets);
        } catch (const ParseError& e) {
            throw ParseError(where + ": " + e.what());
        }
        if (!results_.emplace(std::pair{id->get<std::string>(), o}, std::move(parsed)).second) {
            throw ParseError(where + ": duplicate record for '" + id->get<std::string>() + "' at " +
                             std::string(to_string(o)));
        }
    }
}

FileBackend FileBackend::load(const std::filesystem::path& path) {
    try {
        return FileBackend(read_json_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::vector<Detection> FileBackend::detect(const ImageRef& image) {
    auto it = results_.find({image.image_id, image.orientation});
    if (it == results_.end()) {
        throw BackendError(BackendError::Kind::UnknownImage,
                           descriptor_.name + ": no stored result for '" + image.image_id + "' at " +
                               std::string(to_string(image.orientation)));
    }
    return it->second;
}

}  // namespace neoface
