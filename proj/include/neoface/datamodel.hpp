#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "neoface/geometry.hpp"

namespace neoface {

/// The six reference landmarks. Left and right are the subject's own sides.
enum class LandmarkName : std::uint8_t {
    RightEye = 0,
    LeftEye,
    Nose,
    RightMouth,
    CentreMouth,
    LeftMouth,
};

inline constexpr std::size_t kLandmarkCount = 6;

inline constexpr std::array<LandmarkName, kLandmarkCount> kAllLandmarks{
    LandmarkName::RightEye,   LandmarkName::LeftEye,     LandmarkName::Nose,
    LandmarkName::RightMouth, LandmarkName::CentreMouth, LandmarkName::LeftMouth};

std::string_view to_string(LandmarkName name) noexcept;
std::optional<LandmarkName> parse_landmark_name(std::string_view s) noexcept;

/// The anatomical counterpart under a horizontal flip (nose and centre mouth
/// map to themselves).
LandmarkName mirrored(LandmarkName name) noexcept;

/// Partial map from landmark name to position. Absent entries mean the point
/// was not annotated (occlusion) or not produced by a detector.
class LandmarkSet {
public:
    LandmarkSet() = default;

    const std::optional<Point>& operator[](LandmarkName name) const {
        return points_[static_cast<std::size_t>(name)];
    }
    void set(LandmarkName name, Point p) { points_[static_cast<std::size_t>(name)] = p; }
    void erase(LandmarkName name) { points_[static_cast<std::size_t>(name)].reset(); }
    bool contains(LandmarkName name) const { return (*this)[name].has_value(); }

    std::size_t size() const;
    bool empty() const { return size() == 0; }

    /// Names present, in reference order.
    std::vector<LandmarkName> names() const;

    /// Keep only the given names.
    LandmarkSet restricted_to(const std::vector<LandmarkName>& keep) const;

    friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;

private:
    std::array<std::optional<Point>, kLandmarkCount> points_{};
};

struct FaceAnnotation {
    std::string image_id;
    std::string image_path;
    std::string subject_id;
    std::string source_dataset;
    FrameDims dims;
    BBox face;
    LandmarkSet landmarks;

    friend bool operator==(const FaceAnnotation&, const FaceAnnotation&) = default;
};

/// Returns a description of every rule the annotation breaks; empty when valid.
std::vector<std::string> violations_of(const FaceAnnotation& a);

/// Ordered, validated collection of annotations with a subject index.
class Dataset {
public:
    Dataset() = default;

    /// Validates every record and the id uniqueness constraint.
    /// Throws ValidationError listing every violation.
    explicit Dataset(std::vector<FaceAnnotation> annotations);

    const std::vector<FaceAnnotation>& annotations() const noexcept { return annotations_; }
    std::size_t size() const noexcept { return annotations_.size(); }
    bool empty() const noexcept { return annotations_.empty(); }

    const FaceAnnotation* find(std::string_view image_id) const;
    const FaceAnnotation& at(std::string_view image_id) const;

    /// subject id -> image ids in file order; subjects sorted by id.
    const std::map<std::string, std::vector<std::string>>& subjects() const noexcept {
        return subjects_;
    }

private:
    std::vector<FaceAnnotation> annotations_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::map<std::string, std::vector<std::string>> subjects_;
};

/// Annotation file schema (version 1).
Dataset parse_annotations(const nlohmann::json& doc);
nlohmann::json annotations_to_json(const std::vector<FaceAnnotation>& annotations);

/// Throws ParseError for unreadable or malformed files and ValidationError for
/// schema violations.
Dataset load_annotations(const std::filesystem::path& path);
void save_annotations(const std::vector<FaceAnnotation>& annotations,
                      const std::filesystem::path& path);

struct TrainTestSplit {
    std::uint64_t seed = 0;
    std::vector<std::string> train;
    std::vector<std::string> test;
};

struct FoldSplit {
    std::uint64_t seed = 0;
    std::vector<std::vector<std::string>> folds;
};

/// Subject-grouped train/test split. Subjects are shuffled with `seed` and moved
/// whole into the test side until it holds at least test_fraction * N images.
TrainTestSplit split_train_test(const Dataset& d, double test_fraction, std::uint64_t seed);

/// Subject-grouped k-fold assignment balanced by image count.
FoldSplit kfold(const Dataset& d, int k, std::uint64_t seed);

nlohmann::json to_json(const TrainTestSplit& s);
nlohmann::json to_json(const FoldSplit& s);

}  // namespace neoface
