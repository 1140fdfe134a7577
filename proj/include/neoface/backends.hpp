#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "neoface/datamodel.hpp"
#include "neoface/geometry.hpp"

namespace neoface {

/// One detector hypothesis in the coordinates of the image it was run on.
struct Detection {
    BBox bbox;
    LandmarkSet landmarks;
    double confidence = 0.0;

    friend bool operator==(const Detection&, const Detection&) = default;
};

inline constexpr double kDefaultConfidenceThreshold = 0.05;

/// Drops detections below `conf_threshold` and returns the most confident of
/// the rest. Equal confidences keep the earliest.
std::optional<Detection> select_best(std::span<const Detection> detections,
                                     double conf_threshold = kDefaultConfidenceThreshold);

enum class BackendKind { Mock, File, Subprocess };

std::string_view to_string(BackendKind k) noexcept;

struct BackendDescriptor {
    std::string name;
    std::vector<LandmarkName> landmark_names;
    BackendKind kind = BackendKind::Mock;
};

/// What a backend is asked to look at: the (possibly rotated) image on disk,
/// its size, and which rotation of the original `image_id` it is.
struct ImageRef {
    std::string image_id;
    std::filesystem::path path;
    FrameDims dims;
    Orientation orientation = Orientation::R0;
};

/// Uniform detect contract. Implementations return detections in the frame of
/// the image as given.
class Backend {
public:
    virtual ~Backend() = default;

    virtual const BackendDescriptor& descriptor() const = 0;

    /// Whether `ImageRef::path` must point at real pixels. Strategies only
    /// write rotated temp files for backends that need them.
    virtual bool needs_pixels() const = 0;

    virtual std::vector<Detection> detect(const ImageRef& image) = 0;
};

struct MockProfile {
    /// Confidence reported when the face is turned by the key orientation
    /// relative to upright. Zero means no detection.
    std::map<Orientation, double> confidence{{Orientation::R0, 0.9},
                                             {Orientation::R90, 0.9},
                                             {Orientation::R180, 0.9},
                                             {Orientation::R270, 0.9}};
    double bbox_noise = 0.0;      ///< uniform +-pixels on x, y, w, h
    double landmark_noise = 0.0;  ///< uniform +-pixels per coordinate
    double miss_probability = 0.0;
    std::uint64_t seed = 0;
    std::vector<LandmarkName> landmark_names{kAllLandmarks.begin(), kAllLandmarks.end()};
    /// Per image, the rotation that makes its face upright (default R0).
    std::map<std::string, Orientation> upright;
};

/// Throws ConfigError on out-of-range values.
void validate(const MockProfile& p);

MockProfile mock_profile_from_json(const nlohmann::json& v);

/// Test double that reports the ground-truth face, optionally perturbed,
/// with a confidence that depends on how the face is turned.
class MockBackend final : public Backend {
public:
    MockBackend(std::string name, MockProfile profile, std::shared_ptr<const Dataset> truth);

    const BackendDescriptor& descriptor() const override { return descriptor_; }
    bool needs_pixels() const override { return false; }
    std::vector<Detection> detect(const ImageRef& image) override;

    const MockProfile& profile() const noexcept { return profile_; }

private:
    BackendDescriptor descriptor_;
    MockProfile profile_;
    std::shared_ptr<const Dataset> truth_;
};

/// Precomputed detections keyed by (image id, orientation).
class FileBackend final : public Backend {
public:
    /// Parses the precomputed-detections schema. Throws ParseError.
    explicit FileBackend(const nlohmann::json& doc);
    static FileBackend load(const std::filesystem::path& path);

    const BackendDescriptor& descriptor() const override { return descriptor_; }
    bool needs_pixels() const override { return false; }

    /// Throws BackendError(UnknownImage) when no record exists.
    std::vector<Detection> detect(const ImageRef& image) override;

private:
    BackendDescriptor descriptor_;
    std::map<std::pair<std::string, Orientation>, std::vector<Detection>> results_;
};

/// External plugin speaking the line-delimited JSON protocol over the child's
/// stdin/stdout. One request in flight at a time; not thread-safe.
class SubprocessBackend final : public Backend {
public:
    static constexpr std::chrono::milliseconds kDefaultTimeout{30000};

    /// Spawns the child and waits for its hello. Throws BackendError.
    explicit SubprocessBackend(std::vector<std::string> argv,
                               std::chrono::milliseconds timeout = kDefaultTimeout);
    ~SubprocessBackend() override;

    SubprocessBackend(const SubprocessBackend&) = delete;
    SubprocessBackend& operator=(const SubprocessBackend&) = delete;

    const BackendDescriptor& descriptor() const override { return descriptor_; }
    bool needs_pixels() const override { return true; }

    /// A dead or timed-out child is respawned on the next call.
    std::vector<Detection> detect(const ImageRef& image) override;

    /// Sends shutdown and reaps the child. Returns its exit status, or -1 if
    /// it had to be killed.
    int shutdown();

private:
    void spawn();
    void kill_child();
    void write_line(const std::string& line);
    std::string read_line();

    std::vector<std::string> argv_;
    std::chrono::milliseconds timeout_;
    BackendDescriptor descriptor_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

// Wire format shared by the precomputed file and the plugin protocol.
nlohmann::json detection_to_json(const Detection& d);
Detection detection_from_json(const nlohmann::json& v);
nlohmann::json detections_to_json(std::span<const Detection> ds);
std::vector<Detection> detections_from_json(const nlohmann::json& v);

}  // namespace neoface
