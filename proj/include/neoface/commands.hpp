#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "neoface/augment.hpp"

namespace neoface {

/// Stable exit-code contract of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitInvalid = 1,         ///< validation, configuration or usage error
    kExitBackendFailure = 2,  ///< at least one backend call failed
};

int cmd_validate(const std::filesystem::path& annotations, std::ostream& out, std::ostream& err);

/// Writes the split to `out_file`, or to `out` when the path is empty.
int cmd_split(const std::filesystem::path& annotations, double test_fraction, std::uint64_t seed,
              const std::filesystem::path& out_file, std::ostream& out, std::ostream& err);

int cmd_kfold(const std::filesystem::path& annotations, int k, std::uint64_t seed,
              const std::filesystem::path& out_file, std::ostream& out, std::ostream& err);

struct EvaluateOverrides {
    std::optional<std::filesystem::path> output_dir;
    std::optional<int> workers;
    std::optional<double> conf_threshold;
    std::optional<std::uint64_t> seed;
    std::optional<bool> exclude_io_from_timing;
};

/// Runs every configured method and writes records.json plus the report
/// files into the output directory.
int cmd_evaluate(const std::filesystem::path& config, const EvaluateOverrides& overrides,
                 std::ostream& out, std::ostream& err);

int cmd_augment(const std::filesystem::path& annotations, const AugmentConfig& cfg, int epochs,
                const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);

/// Re-renders report files from a records.json written by cmd_evaluate.
int cmd_report(const std::filesystem::path& records, const std::filesystem::path& out_dir,
               std::ostream& out, std::ostream& err);

}  // namespace neoface
