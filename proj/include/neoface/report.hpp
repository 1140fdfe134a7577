#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "neoface/evaluate.hpp"
#include "neoface/metrics.hpp"

namespace neoface {

/// cells[i][j] tests "row method i is better than column method j".
struct SignificanceMatrix {
    std::vector<std::string> methods;
    std::vector<std::vector<std::optional<SignificanceResult>>> cells;
};

struct FullReport {
    double conf_threshold = kDefaultConfidenceThreshold;
    std::vector<EvalReport> rows;
    std::vector<std::vector<LandmarkName>> vocabularies;  ///< parallel to rows
    SignificanceMatrix iou;  ///< higher IoU is better; images both methods detected
    SignificanceMatrix nme;  ///< lower error is better; (image, landmark) pairs both produced
};

/// Per-image evaluation records of one method; failed images are skipped.
std::vector<ImageEvalRecord> eval_records(const EvaluationRun& run, std::size_t method_index);

FullReport build_report(const EvaluationRun& run);

/// Method, AP50 (%), mAP (%), Empty (%), Time (ms)
std::string render_detection_csv(const FullReport& r);
/// Method, All, Eyes, Nose, Mouth, Empty (%)
std::string render_landmark_csv(const FullReport& r);
/// Method x method one-sided p-values.
std::string render_significance_csv(const SignificanceMatrix& m);
std::string render_markdown(const FullReport& r);
nlohmann::json report_to_json(const FullReport& r);

/// Writes detection.csv, landmarks.csv, significance_iou.csv,
/// significance_nme.csv, report.md and report.json into `dir`.
void write_report(const FullReport& r, const std::filesystem::path& dir);

}  // namespace neoface
