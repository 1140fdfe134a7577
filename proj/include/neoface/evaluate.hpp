#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "neoface/backends.hpp"
#include "neoface/datamodel.hpp"
#include "neoface/strategies.hpp"

namespace neoface {

struct BackendSpec {
    std::string name;
    BackendKind kind = BackendKind::Mock;
    MockProfile mock;
    std::filesystem::path file;
    std::vector<std::string> command;
    std::chrono::milliseconds timeout = SubprocessBackend::kDefaultTimeout;
};

enum class StrategyKind { Direct, Orient4, FusionMax, FusionGuided };

/// One report row. Written in config files as a compact string:
///   direct:<backend>   orient4:<backend>
///   fusion_max:<method>,<method>
///   fusion_guided:<orienter backend>,<main backend>,<aux method>
/// Fusions refer to methods listed earlier and reuse their outcomes.
struct MethodSpec {
    std::string name;
    StrategyKind strategy = StrategyKind::Direct;
    std::string backend;   ///< direct, orient4
    std::string first;     ///< fusion_max
    std::string second;    ///< fusion_max
    std::string orienter;  ///< fusion_guided
    std::string main;      ///< fusion_guided
    std::string aux;       ///< fusion_guided

    std::string strategy_string() const;
};

/// Throws ConfigError.
MethodSpec parse_method(const std::string& name, const std::string& strategy);

struct RunConfig {
    std::filesystem::path annotations;
    /// Image paths in the annotation file are resolved against this directory.
    std::filesystem::path image_root;
    std::vector<BackendSpec> backends;
    std::vector<MethodSpec> methods;
    double conf_threshold = kDefaultConfidenceThreshold;
    std::filesystem::path output_dir = "report";
    int workers = 1;
    std::uint64_t seed = 0;
    bool exclude_io_from_timing = false;
    std::filesystem::path temp_dir;

    const BackendSpec* backend(const std::string& name) const;
    const MethodSpec* method(const std::string& name) const;
};

/// Checks references, ranges and duplicate names. Throws ConfigError.
void validate(const RunConfig& cfg);

/// Relative paths are resolved against `base_dir`.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Instantiates a backend. Mock backends share `truth`.
std::unique_ptr<Backend> make_backend(const BackendSpec& spec,
                                      std::shared_ptr<const Dataset> truth);

/// Outcome of one method on one image: either a StrategyOutcome or the error
/// that prevented it.
struct MethodImageResult {
    std::optional<StrategyOutcome> outcome;
    std::string error;

    bool failed() const noexcept { return !outcome.has_value(); }
};

struct MethodRun {
    std::string name;
    std::string strategy;
    std::vector<LandmarkName> vocabulary;
    std::vector<MethodImageResult> results;  ///< parallel to EvaluationRun::images

    std::size_t n_failed() const;
};

/// Everything needed to recompute a report offline.
struct EvaluationRun {
    double conf_threshold = kDefaultConfidenceThreshold;
    std::vector<FaceAnnotation> images;
    std::vector<MethodRun> methods;

    std::size_t n_failures() const;
};

/// Runs every method on every image. Images are spread over `cfg.workers`
/// threads, each with its own backend instances; results are stored in
/// dataset order so output does not depend on scheduling.
EvaluationRun run_evaluation(const RunConfig& cfg, const Dataset& dataset);

nlohmann::json records_to_json(const EvaluationRun& run);
/// Throws ParseError.
EvaluationRun records_from_json(const nlohmann::json& doc);

}  // namespace neoface
