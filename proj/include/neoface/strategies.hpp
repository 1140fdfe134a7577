#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "neoface/backends.hpp"
#include "neoface/datamodel.hpp"

namespace neoface {

/// The original image a strategy works on.
struct ImageInput {
    std::string image_id;
    std::filesystem::path path;
    FrameDims dims;
};

ImageInput image_input(const FaceAnnotation& a, const std::filesystem::path& base_dir = {});

struct StrategyOptions {
    double conf_threshold = kDefaultConfidenceThreshold;
    /// Directory for rotated temp images; empty selects default_temp_dir().
    std::filesystem::path temp_dir;
    /// Leave image decoding and temp-file writes out of `elapsed_s`.
    bool exclude_io_from_timing = false;
};

/// $NEOFACE_TMPDIR if set, otherwise a per-process directory under the
/// system temp path.
std::filesystem::path default_temp_dir();

/// Result of a strategy on one image, always in original-frame coordinates.
struct StrategyOutcome {
    std::string image_id;
    std::optional<Detection> detection;
    Orientation chosen_orientation = Orientation::R0;
    std::string source_backend;
    double elapsed_s = 0.0;
    int backend_calls = 0;
    /// The mapped-back detection had to be clipped to the original frame.
    bool clamped = false;

    bool empty() const noexcept { return !detection.has_value(); }
    double confidence() const noexcept { return detection ? detection->confidence : 0.0; }
};

/// One call at R0.
StrategyOutcome run_direct(Backend& backend, const ImageInput& image,
                           const StrategyOptions& options = {});

/// One call per orientation; keeps the most confident orientation (earliest
/// in R0, R90, R180, R270 order on ties) and maps it back.
StrategyOutcome run_orient4(Backend& backend, const ImageInput& image,
                            const StrategyOptions& options = {});

/// Keeps the more confident of two outcomes for the same image; `a` wins ties
/// and a non-empty outcome always beats an empty one. Time and call counts
/// are summed. Throws Error on mismatched image ids.
StrategyOutcome run_fusion_max(const StrategyOutcome& a, const StrategyOutcome& b);

/// Sweeps the cheap `orienter` over all four orientations, runs `main` once
/// at the orienter's most confident orientation (R0 if it found nothing), and
/// fuses that with `aux` by run_fusion_max.
StrategyOutcome run_fusion_guided(Backend& orienter, Backend& main, const StrategyOutcome& aux,
                                  const ImageInput& image, const StrategyOptions& options = {});

}  // namespace neoface
