#include "neoface/commands.hpp"

#include <ostream>

#include <nlohmann/json.hpp>

#include "neoface/datamodel.hpp"
#include "neoface/evaluate.hpp"
#include "neoface/json_io.hpp"
#include "neoface/report.hpp"

namespace neoface {

using nlohmann::json;

namespace {

void print_validation(const ValidationError& e, std::ostream& err) {
    err << e.violations().size() << " validation error(s):\n";
    for (const auto& v : e.violations()) err << "  " << v << '\n';
}

// Runs `body`, mapping the toolkit's exceptions onto exit codes.
template <typename F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ValidationError& e) {
        print_validation(e, err);
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
    } catch (const std::invalid_argument& e) {
        err << "invalid argument: " << e.what() << '\n';
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
    }
    return kExitInvalid;
}

void emit(const json& doc, const std::filesystem::path& out_file, std::ostream& out) {
    if (out_file.empty()) {
        out << doc.dump(2) << '\n';
    } else {
        write_json_file(doc, out_file);
    }
}

}  // namespace

int cmd_validate(const std::filesystem::path& annotations, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const Dataset d = load_annotations(annotations);
        out << annotations.string() << ": " << d.size() << " image(s), " << d.subjects().size()
            << " subject(s)\n";
        return kExitOk;
    });
}

int cmd_split(const std::filesystem::path& annotations, double test_fraction, std::uint64_t seed,
              const std::filesystem::path& out_file, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const Dataset d = load_annotations(annotations);
        emit(to_json(split_train_test(d, test_fraction, seed)), out_file, out);
        return kExitOk;
    });
}

int cmd_kfold(const std::filesystem::path& annotations, int k, std::uint64_t seed,
              const std::filesystem::path& out_file, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const Dataset d = load_annotations(annotations);
        emit(to_json(kfold(d, k, seed)), out_file, out);
        return kExitOk;
    });
}

int cmd_evaluate(const std::filesystem::path& config, const EvaluateOverrides& overrides,
                 std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        json doc;
        try {
            doc = read_json_file(config);
        } catch (const ParseError& e) {
            throw ConfigError(e.what());
        }
        // The seed feeds mock profile defaults, so it must be applied before parsing.
        if (overrides.seed && doc.is_object()) doc["seed"] = *overrides.seed;
        const auto base = config.has_parent_path() ? config.parent_path() : std::filesystem::path(".");
        RunConfig cfg = parse_run_config(doc, base);
        if (overrides.output_dir) cfg.output_dir = *overrides.output_dir;
        if (overrides.workers) cfg.workers = *overrides.workers;
        if (overrides.conf_threshold) cfg.conf_threshold = *overrides.conf_threshold;
        if (overrides.exclude_io_from_timing) cfg.exclude_io_from_timing = *overrides.exclude_io_from_timing;
        validate(cfg);

        const Dataset dataset = load_annotations(cfg.annotations);
        const EvaluationRun run = run_evaluation(cfg, dataset);
        write_json_file(records_to_json(run), cfg.output_dir / "records.json");
        const FullReport report = build_report(run);
        write_report(report, cfg.output_dir);
        out << render_detection_csv(report);

        if (run.n_failures() == 0) return kExitOk;
        err << run.n_failures() << " backend failure(s):\n";
        for (const MethodRun& m : run.methods) {
            const std::size_t failed = m.n_failed();
            if (failed == 0) continue;
            err << "  " << m.name << ": " << failed << " of " << run.images.size() << " image(s)"
                << (failed == run.images.size() ? " (method failed completely)" : "") << '\n';
            for (std::size_t i = 0; i < m.results.size(); ++i) {
                if (m.results[i].failed()) {
                    err << "    " << run.images[i].image_id << ": " << m.results[i].error << '\n';
                }
            }
        }
        return kExitBackendFailure;
    });
}

int cmd_augment(const std::filesystem::path& annotations, const AugmentConfig& cfg, int epochs,
                const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const Dataset d = load_annotations(annotations);
        const auto root = annotations.has_parent_path() ? annotations.parent_path()
                                                        : std::filesystem::path(".");
        const json manifest = export_augmented(d, root, cfg, epochs, out_dir);
        out << "wrote " << manifest["entries"].size() << " sample(s) over " << epochs
            << " epoch(s) to " << out_dir.string() << '\n';
        if (!manifest["rejected"].empty()) {
            err << manifest["rejected"].size() << " draw(s) rejected and redrawn\n";
        }
        if (!manifest["skipped"].empty()) {
            err << manifest["skipped"].size() << " sample(s) skipped after repeated rejection\n";
        }
        return kExitOk;
    });
}

int cmd_report(const std::filesystem::path& records, const std::filesystem::path& out_dir,
               std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const EvaluationRun run = records_from_json(read_json_file(records));
        const FullReport report = build_report(run);
        write_report(report, out_dir);
        out << render_detection_csv(report);
        return run.n_failures() == 0 ? kExitOk : kExitBackendFailure;
    });
}

}  // namespace neoface
