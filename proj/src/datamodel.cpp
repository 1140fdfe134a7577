#include "neoface/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "neoface/json_io.hpp"
#include "neoface/rng.hpp"

namespace neoface {

using nlohmann::json;

std::string_view to_string(LandmarkName name) noexcept {
    switch (name) {
        case LandmarkName::RightEye: return "right_eye";
        case LandmarkName::LeftEye: return "left_eye";
        case LandmarkName::Nose: return "nose";
        case LandmarkName::RightMouth: return "right_mouth";
        case LandmarkName::CentreMouth: return "centre_mouth";
        case LandmarkName::LeftMouth: return "left_mouth";
    }
    return "nose";
}

std::optional<LandmarkName> parse_landmark_name(std::string_view s) noexcept {
    for (LandmarkName n : kAllLandmarks) {
        if (to_string(n) == s) return n;
    }
    return std::nullopt;
}

LandmarkName mirrored(LandmarkName name) noexcept {
    switch (name) {
        case LandmarkName::RightEye: return LandmarkName::LeftEye;
        case LandmarkName::LeftEye: return LandmarkName::RightEye;
        case LandmarkName::RightMouth: return LandmarkName::LeftMouth;
        case LandmarkName::LeftMouth: return LandmarkName::RightMouth;
        default: return name;
    }
}

std::size_t LandmarkSet::size() const {
    return static_cast<std::size_t>(
        std::count_if(points_.begin(), points_.end(), [](const auto& p) { return p.has_value(); }));
}

std::vector<LandmarkName> LandmarkSet::names() const {
    std::vector<LandmarkName> out;
    for (LandmarkName n : kAllLandmarks) {
        if (contains(n)) out.push_back(n);
    }
    return out;
}

LandmarkSet LandmarkSet::restricted_to(const std::vector<LandmarkName>& keep) const {
    LandmarkSet out;
    for (LandmarkName n : keep) {
        if (const auto& p = (*this)[n]) out.set(n, *p);
    }
    return out;
}

std::vector<std::string> violations_of(const FaceAnnotation& a) {
    std::vector<std::string> out;
    const std::string who = "image '" + a.image_id + "'";
    if (a.image_id.empty()) out.push_back("annotation with empty image id");
    if (a.subject_id.empty()) out.push_back(who + ": empty subject id");
    if (!valid(a.dims)) {
        out.push_back(who + ": non-positive frame size " + detail::describe(a.dims));
        return out;
    }
    if (!valid(a.face)) {
        out.push_back(who + ": invalid face box " + detail::describe(a.face));
    } else if (!in_frame(a.face, a.dims)) {
        out.push_back(who + ": face box " + detail::describe(a.face) + " outside frame " +
                      detail::describe(a.dims));
    }
    for (LandmarkName n : kAllLandmarks) {
        const auto& p = a.landmarks[n];
        if (p && !in_frame(*p, a.dims)) {
            out.push_back(who + ": landmark " + std::string(to_string(n)) + " at " +
                          detail::describe(*p) + " outside frame " + detail::describe(a.dims));
        }
    }
    return out;
}

Dataset::Dataset(std::vector<FaceAnnotation> annotations) : annotations_(std::move(annotations)) {
    std::vector<std::string> problems;
    for (std::size_t i = 0; i < annotations_.size(); ++i) {
        const FaceAnnotation& a = annotations_[i];
        auto v = violations_of(a);
        problems.insert(problems.end(), v.begin(), v.end());
        if (!by_id_.emplace(a.image_id, i).second) {
            problems.push_back("duplicate image id '" + a.image_id + "'");
        }
    }
    if (!problems.empty()) throw ValidationError(std::move(problems));
    for (const FaceAnnotation& a : annotations_) subjects_[a.subject_id].push_back(a.image_id);
}

const FaceAnnotation* Dataset::find(std::string_view image_id) const {
    auto it = by_id_.find(std::string(image_id));
    return it == by_id_.end() ? nullptr : &annotations_[it->second];
}

const FaceAnnotation& Dataset::at(std::string_view image_id) const {
    if (const FaceAnnotation* a = find(image_id)) return *a;
    throw Error("unknown image id '" + std::string(image_id) + "'");
}

namespace {

FaceAnnotation parse_record(const json& rec, std::size_t index, std::vector<std::string>& problems) {
    FaceAnnotation a;
    const std::string where = "images[" + std::to_string(index) + "]";
    if (!rec.is_object()) {
        problems.push_back(where + ": not an object");
        return a;
    }
    auto str_field = [&](const char* key, std::string& dst, bool required) {
        auto it = rec.find(key);
        if (it == rec.end()) {
            if (required) problems.push_back(where + ": missing \"" + key + "\"");
            return;
        }
        if (!it->is_string()) {
            problems.push_back(where + ": \"" + key + "\" must be a string");
            return;
        }
        dst = it->get<std::string>();
    };
    str_field("id", a.image_id, true);
    const std::string who = a.image_id.empty() ? where : "image '" + a.image_id + "'";
    str_field("path", a.image_path, true);
    str_field("subject", a.subject_id, true);
    str_field("dataset", a.source_dataset, false);

    auto int_field = [&](const char* key, int& dst) {
        auto it = rec.find(key);
        if (it == rec.end() || !it->is_number_integer()) {
            problems.push_back(who + ": \"" + key + "\" must be an integer");
            return;
        }
        dst = it->get<int>();
    };
    int_field("width", a.dims.w);
    int_field("height", a.dims.h);

    try {
        auto it = rec.find("face");
        if (it == rec.end()) throw ParseError("missing \"face\"");
        a.face = bbox_from_json_object(*it);
    } catch (const ParseError& e) {
        problems.push_back(who + ": " + e.what());
    }
    if (auto it = rec.find("landmarks"); it != rec.end()) {
        try {
            a.landmarks = landmarks_from_json(*it);
        } catch (const ParseError& e) {
            problems.push_back(who + ": " + e.what());
        }
    }
    return a;
}

}  // namespace

Dataset parse_annotations(const json& doc) {
    if (!doc.is_object()) throw ParseError("annotation file must be a JSON object");
    auto version = doc.find("version");
    if (version == doc.end() || !version->is_number_integer() || version->get<int>() != 1) {
        throw ParseError("unsupported or missing annotation file version (expected 1)");
    }
    auto images = doc.find("images");
    if (images == doc.end() || !images->is_array()) {
        throw ParseError("annotation file must contain an \"images\" array");
    }
    std::vector<std::string> problems;
    std::vector<FaceAnnotation> out;
    out.reserve(images->size());
    for (std::size_t i = 0; i < images->size(); ++i) {
        out.push_back(parse_record((*images)[i], i, problems));
    }
    if (!problems.empty()) throw ValidationError(std::move(problems));
    return Dataset(std::move(out));
}

json annotations_to_json(const std::vector<FaceAnnotation>& annotations) {
    json images = json::array();
    for (const FaceAnnotation& a : annotations) {
        json rec = {{"id", a.image_id},          {"path", a.image_path},
                    {"subject", a.subject_id},   {"dataset", a.source_dataset},
                    {"width", a.dims.w},         {"height", a.dims.h},
                    {"face", bbox_to_json_object(a.face)}};
        rec["landmarks"] = landmarks_to_json(a.landmarks);
        images.push_back(std::move(rec));
    }
    return {{"version", 1}, {"images", std::move(images)}};
}

Dataset load_annotations(const std::filesystem::path& path) {
    return parse_annotations(read_json_file(path));
}

void save_annotations(const std::vector<FaceAnnotation>& annotations,
                      const std::filesystem::path& path) {
    write_json_file(annotations_to_json(annotations), path);
}

namespace {

struct SubjectGroup {
    std::string subject;
    std::vector<std::string> images;
};

std::vector<SubjectGroup> shuffled_subjects(const Dataset& d, std::uint64_t seed) {
    std::vector<SubjectGroup> groups;
    for (const auto& [subject, ids] : d.subjects()) groups.push_back({subject, ids});
    Rng rng(seed);
    rng.shuffle(groups);
    return groups;
}

void append(std::vector<std::string>& dst, const std::vector<std::string>& src) {
    dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

TrainTestSplit split_train_test(const Dataset& d, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("test fraction must lie strictly between 0 and 1");
    }
    if (d.subjects().size() < 2) {
        throw Error("need at least two subjects to split, found " +
                    std::to_string(d.subjects().size()));
    }
    const double target = test_fraction * static_cast<double>(d.size());
    TrainTestSplit split;
    split.seed = seed;
    std::size_t test_images = 0;
    for (const SubjectGroup& g : shuffled_subjects(d, seed)) {
        if (static_cast<double>(test_images) < target) {
            append(split.test, g.images);
            test_images += g.images.size();
        } else {
            append(split.train, g.images);
        }
    }
    if (split.train.empty()) {
        throw Error("test fraction " + std::to_string(test_fraction) +
                    " consumed every subject; too few subjects for a non-empty training side");
    }
    return split;
}

FoldSplit kfold(const Dataset& d, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("k must be at least 2");
    if (d.subjects().size() < static_cast<std::size_t>(k)) {
        throw Error("cannot form " + std::to_string(k) + " folds from " +
                    std::to_string(d.subjects().size()) + " subjects");
    }
    auto groups = shuffled_subjects(d, seed);
    // Largest subjects first; the shuffle decides order among equal sizes.
    std::stable_sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
        return a.images.size() > b.images.size();
    });
    FoldSplit split;
    split.seed = seed;
    split.folds.resize(static_cast<std::size_t>(k));
    for (const SubjectGroup& g : groups) {
        auto smallest = std::min_element(
            split.folds.begin(), split.folds.end(),
            [](const auto& a, const auto& b) { return a.size() < b.size(); });
        append(*smallest, g.images);
    }
    return split;
}

json to_json(const TrainTestSplit& s) {
    return {{"seed", s.seed}, {"train", s.train}, {"test", s.test}};
}

json to_json(const FoldSplit& s) { return {{"seed", s.seed}, {"folds", s.folds}}; }

}  // namespace neoface
