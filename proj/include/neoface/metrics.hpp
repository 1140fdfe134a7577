#pragma once

// Evaluation protocol for single-face images.
//
// Every image carries exactly one face, so a method either produces one
// detection (true or false positive depending on IoU) or none ("empty").
// Precision is TP / (TP + FP) over images with a detection; empties are
// reported separately as the empty rate and never enter the precision.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neoface/datamodel.hpp"
#include "neoface/strategies.hpp"

namespace neoface {

enum class OutcomeKind { TP, FP, Empty };

std::string_view to_string(OutcomeKind k) noexcept;

/// IoU thresholds 0.50, 0.55, ..., 0.95.
inline constexpr std::array<double, 10> kMapThresholds{0.50, 0.55, 0.60, 0.65, 0.70,
                                                       0.75, 0.80, 0.85, 0.90, 0.95};

/// Empty without a detection, TP when IoU >= threshold, FP otherwise.
/// Throws std::invalid_argument unless 0 < iou_threshold <= 1.
OutcomeKind classify(const StrategyOutcome& outcome, const FaceAnnotation& gt,
                     double iou_threshold);

/// Landmark distance over the square root of the reference box area.
double norm_error(const Point& est, const Point& ref, const BBox& ref_bbox);

struct ImageEvalRecord {
    std::string image_id;
    std::optional<double> iou;  ///< present iff a detection was produced
    /// Present only for landmarks both annotated and detected.
    std::array<std::optional<double>, kLandmarkCount> norm_error{};
    bool landmarks_detected = false;
    double elapsed_s = 0.0;

    bool empty() const noexcept { return !iou.has_value(); }
    const std::optional<double>& error_of(LandmarkName n) const {
        return norm_error[static_cast<std::size_t>(n)];
    }
};

ImageEvalRecord evaluate_image(const StrategyOutcome& outcome, const FaceAnnotation& gt);

OutcomeKind kind_at(const ImageEvalRecord& r, double iou_threshold);

/// Precision in percent at one IoU threshold; nullopt when no record has a
/// detection. Throws std::invalid_argument on an empty record list.
std::optional<double> ap_at(std::span<const ImageEvalRecord> records, double iou_threshold);

/// Mean of ap_at over kMapThresholds, in percent.
std::optional<double> map_range(std::span<const ImageEvalRecord> records);

enum class LandmarkGroup { All, Eyes, Nose, Mouth };

inline constexpr std::array<LandmarkGroup, 4> kAllGroups{LandmarkGroup::All, LandmarkGroup::Eyes,
                                                         LandmarkGroup::Nose, LandmarkGroup::Mouth};

std::string_view to_string(LandmarkGroup g) noexcept;
std::span<const LandmarkName> members(LandmarkGroup g) noexcept;

struct MneValue {
    double value = 0.0;
    std::size_t n_pairs = 0;  ///< (image, landmark) pairs averaged
};

/// Mean normalized error over every comparable (image, landmark) pair in the
/// group; nullopt when there is none.
std::optional<MneValue> mne(std::span<const ImageEvalRecord> records, LandmarkGroup group);

/// Percent of records without a detection.
double empty_rate(std::span<const ImageEvalRecord> records);
/// Percent of records without any detected landmark.
double landmark_empty_rate(std::span<const ImageEvalRecord> records);
double mean_time_ms(std::span<const ImageEvalRecord> records);

struct EvalReport {
    std::string method;
    std::optional<double> ap50;
    std::optional<double> map;
    double empty_rate = 0.0;
    double landmark_empty_rate = 0.0;
    double mean_time_ms = 0.0;
    std::array<std::optional<MneValue>, 4> mne{};  ///< indexed like kAllGroups
    std::size_t n_images = 0;
    std::size_t n_errors = 0;  ///< images dropped because the backend failed

    const std::optional<MneValue>& mne_of(LandmarkGroup g) const {
        return mne[static_cast<std::size_t>(g)];
    }
};

/// Throws std::invalid_argument on an empty record list.
EvalReport aggregate_report(std::span<const ImageEvalRecord> records, std::string method_name,
                            std::size_t n_errors = 0);

/// Which way the one-sided test looks: Greater means "a tends to exceed b".
enum class Alternative { Greater, Less };

struct SignificanceResult {
    std::string method_a;
    std::string method_b;
    double statistic = 0.0;  ///< sum of ranks of positive differences a - b
    double p_value = 1.0;
    std::size_t n_effective = 0;  ///< pairs left after dropping zero differences
    bool exact = true;
    bool a_better = false;
};

inline constexpr std::size_t kWilcoxonExactLimit = 20;

/// Paired Wilcoxon signed-rank test. Zero differences are dropped and tied
/// magnitudes share their average rank. The p-value is exact for up to
/// kWilcoxonExactLimit pairs and uses the tie- and continuity-corrected
/// normal approximation above that.
/// Throws std::invalid_argument on mismatched or empty inputs and
/// NoInformationError when every difference is zero.
SignificanceResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                        Alternative alternative);

}  // namespace neoface
