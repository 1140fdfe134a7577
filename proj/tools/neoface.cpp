#include <iostream>
#include <limits>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "neoface/commands.hpp"
#include "neoface/json_io.hpp"

int main(int argc, char** argv) {
    using namespace neoface;

    CLI::App app{"Neonatal face and landmark detection benchmarking toolkit"};
    app.require_subcommand(1);

    std::string annotations;
    std::string out_path;
    std::uint64_t seed = 0;

    auto* validate = app.add_subcommand("validate", "Check an annotation file against the schema");
    validate->add_option("annotations", annotations, "Annotation file")->required();

    double fraction = 0.2;
    auto* split = app.add_subcommand("split", "Subject-grouped train/test split");
    split->add_option("annotations", annotations, "Annotation file")->required();
    split->add_option("--fraction", fraction, "Test fraction")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    split->add_option("--seed", seed, "Shuffle seed")->capture_default_str();
    split->add_option("-o,--out", out_path, "Output file (stdout if omitted)");

    int k = 5;
    auto* kfold = app.add_subcommand("kfold", "Subject-grouped k-fold assignment");
    kfold->add_option("annotations", annotations, "Annotation file")->required();
    kfold->add_option("-k,--k", k, "Number of folds")
        ->check(CLI::Range(2, std::numeric_limits<int>::max()))
        ->capture_default_str();
    kfold->add_option("--seed", seed, "Shuffle seed")->capture_default_str();
    kfold->add_option("-o,--out", out_path, "Output file (stdout if omitted)");

    std::string config;
    EvaluateOverrides overrides;
    auto* evaluate = app.add_subcommand("evaluate", "Run methods over backends and write reports");
    evaluate->add_option("config", config, "Run configuration (JSON)")->required();
    evaluate->add_option("-o,--out", overrides.output_dir, "Output directory");
    evaluate->add_option("-j,--workers", overrides.workers, "Parallel workers")
        ->check(CLI::PositiveNumber);
    evaluate->add_option("--conf-threshold", overrides.conf_threshold, "Confidence threshold")
        ->check(CLI::Range(0.0, 1.0));
    evaluate->add_option("--seed", overrides.seed, "Default seed for mock backends");
    bool exclude_io = false;
    evaluate->add_flag("--exclude-io", exclude_io,
                       "Leave image decoding and temp-file writes out of timing");

    AugmentConfig aug;
    int epochs = 1;
    std::string aug_config;
    auto* augment = app.add_subcommand("augment", "Export augmented training epochs");
    augment->add_option("annotations", annotations, "Annotation file")->required();
    augment->add_option("-o,--out", out_path, "Output directory")->required();
    augment->add_option("--epochs", epochs, "Number of epochs")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    augment->add_option("--config", aug_config, "Augmentation config (JSON)");
    augment->add_option("--seed", aug.seed, "Master seed");
    augment->add_option("--flip-prob", aug.flip_prob)->check(CLI::Range(0.0, 1.0));
    augment->add_option("--hue", aug.hue_frac)->check(CLI::Range(0.0, 1.0));
    augment->add_option("--saturation", aug.sat_frac)->check(CLI::Range(0.0, 1.0));
    augment->add_option("--value", aug.val_frac)->check(CLI::Range(0.0, 1.0));
    augment->add_option("--translate", aug.translate_frac)->check(CLI::Range(0.0, 1.0));
    augment->add_option("--scale", aug.scale_frac)->check(CLI::Range(0.0, 1.0));

    std::string records;
    auto* report = app.add_subcommand("report", "Re-render report files from records.json");
    report->add_option("records", records, "Records file written by evaluate")->required();
    report->add_option("-o,--out", out_path, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInvalid;
    }

    if (*validate) return cmd_validate(annotations, std::cout, std::cerr);
    if (*split) return cmd_split(annotations, fraction, seed, out_path, std::cout, std::cerr);
    if (*kfold) return cmd_kfold(annotations, k, seed, out_path, std::cout, std::cerr);
    if (*evaluate) {
        if (exclude_io) overrides.exclude_io_from_timing = true;
        return cmd_evaluate(config, overrides, std::cout, std::cerr);
    }
    if (*augment) {
        if (!aug_config.empty()) {
            // Flags given explicitly on the command line win over the file.
            AugmentConfig from_file;
            try {
                from_file = augment_config_from_json(read_json_file(aug_config));
            } catch (const std::exception& e) {
                std::cerr << "config error: " << e.what() << '\n';
                return kExitInvalid;
            }
            if (augment->count("--seed") == 0) aug.seed = from_file.seed;
            if (augment->count("--flip-prob") == 0) aug.flip_prob = from_file.flip_prob;
            if (augment->count("--hue") == 0) aug.hue_frac = from_file.hue_frac;
            if (augment->count("--saturation") == 0) aug.sat_frac = from_file.sat_frac;
            if (augment->count("--value") == 0) aug.val_frac = from_file.val_frac;
            if (augment->count("--translate") == 0) aug.translate_frac = from_file.translate_frac;
            if (augment->count("--scale") == 0) aug.scale_frac = from_file.scale_frac;
            aug.fill = from_file.fill;
        }
        return cmd_augment(annotations, aug, epochs, out_path, std::cout, std::cerr);
    }
    if (*report) return cmd_report(records, out_path, std::cout, std::cerr);
    return kExitInvalid;
}
