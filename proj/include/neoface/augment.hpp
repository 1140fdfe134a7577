#pragma once

#include <cstdint>
#include <filesystem>

#include <nlohmann/json_fwd.hpp>

#include "neoface/datamodel.hpp"
#include "neoface/image.hpp"

namespace neoface {

struct AugmentConfig {
    double flip_prob = 0.5;
    double hue_frac = 0.01;        ///< additive hue shift, fraction of the hue circle
    double sat_frac = 0.10;        ///< multiplicative saturation gain 1 +- frac
    double val_frac = 0.10;        ///< multiplicative value gain 1 +- frac
    double translate_frac = 0.10;  ///< of frame width / height
    double scale_frac = 0.10;
    std::uint8_t fill = 114;       ///< grey level for exposed border
    std::uint64_t seed = 0;

    /// No flip and all fractions zero.
    static AugmentConfig identity() {
        return {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 114, 0};
    }
};

/// Throws ConfigError when a fraction or probability leaves [0, 1].
void validate(const AugmentConfig& cfg);

AugmentConfig augment_config_from_json(const nlohmann::json& v);
nlohmann::json to_json(const AugmentConfig& cfg);

/// Concrete parameters drawn for one sample.
struct AugmentParams {
    bool flip = false;
    double hue_shift = 0.0;
    double sat_gain = 1.0;
    double val_gain = 1.0;
    double tx = 0.0;  ///< pixels
    double ty = 0.0;  ///< pixels
    double scale = 1.0;

    bool photometric_identity() const { return hue_shift == 0.0 && sat_gain == 1.0 && val_gain == 1.0; }
    bool geometric_identity() const { return !flip && tx == 0.0 && ty == 0.0 && scale == 1.0; }

    friend bool operator==(const AugmentParams&, const AugmentParams&) = default;
};

nlohmann::json to_json(const AugmentParams& p);
AugmentParams augment_params_from_json(const nlohmann::json& v);

AugmentParams draw_params(const AugmentConfig& cfg, FrameDims dims, std::uint64_t draw_seed);

/// The geometric part as a map on continuous coordinates: optional mirror,
/// scale about the frame centre, then translation.
Point forward_map(const Point& p, FrameDims dims, const AugmentParams& params);

struct AugmentedSample {
    Image image;
    FaceAnnotation annotation;
    AugmentParams applied;
};

/// Applies `params` to pixels (nearest-neighbour inverse mapping, `fill` for
/// exposed border) and to the annotation. Landmarks that leave the frame are
/// dropped; the box is clipped. Mirroring also swaps left/right names.
/// Throws SampleRejected when the face box ends up entirely outside.
AugmentedSample apply_augmentation(const Image& image, const FaceAnnotation& annotation,
                                   const AugmentParams& params, std::uint8_t fill = 114);

/// draw_params followed by apply_augmentation.
AugmentedSample augment_sample(const Image& image, const FaceAnnotation& annotation,
                               const AugmentConfig& cfg, std::uint64_t draw_seed);

/// Hue rotation and saturation/value gains, in place.
void apply_hsv(Image& image, double hue_shift, double sat_gain, double val_gain);

/// Seed used for (epoch, image, attempt) under a master seed.
std::uint64_t sample_seed(std::uint64_t master, int epoch, std::string_view image_id, int attempt);

inline constexpr int kMaxAugmentAttempts = 10;

/// Writes epoch_<e>/images/<id>.png and epoch_<e>/annotations.json for each
/// epoch plus manifest.json under `out_dir`, and returns the manifest.
/// Image paths in `dataset` are resolved against `image_root`.
nlohmann::json export_augmented(const Dataset& dataset, const std::filesystem::path& image_root,
                                const AugmentConfig& cfg, int epochs,
                                const std::filesystem::path& out_dir,
                                int max_attempts = kMaxAugmentAttempts);

}  // namespace neoface
