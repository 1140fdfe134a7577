#include "neoface/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "neoface/json_io.hpp"

namespace neoface {

using nlohmann::json;

namespace {

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = s.find(',', start);
        out.push_back(s.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
    return p.is_relative() ? base / p : p;
}

}  // namespace

std::string MethodSpec::strategy_string() const {
    switch (strategy) {
        case StrategyKind::Direct: return "direct:" + backend;
        case StrategyKind::Orient4: return "orient4:" + backend;
        case StrategyKind::FusionMax: return "fusion_max:" + first + "," + second;
        case StrategyKind::FusionGuided:
            return "fusion_guided:" + orienter + "," + main + "," + aux;
    }
    return {};
}

MethodSpec parse_method(const std::string& name, const std::string& strategy) {
    MethodSpec m;
    m.name = name;
    if (name.empty()) throw ConfigError("method names must be non-empty");
    const auto colon = strategy.find(':');
    if (colon == std::string::npos) {
        throw ConfigError("method '" + name + "': strategy \"" + strategy +
                          "\" must look like kind:arguments");
    }
    const std::string kind = strategy.substr(0, colon);
    const auto args = split_csv(strategy.substr(colon + 1));
    auto expect = [&](std::size_t n) {
        if (args.size() != n || std::any_of(args.begin(), args.end(),
                                            [](const auto& a) { return a.empty(); })) {
            throw ConfigError("method '" + name + "': " + kind + " takes " + std::to_string(n) +
                              " argument(s)");
        }
    };
    if (kind == "direct" || kind == "orient4") {
        expect(1);
        m.strategy = kind == "direct" ? StrategyKind::Direct : StrategyKind::Orient4;
        m.backend = args[0];
    } else if (kind == "fusion_max") {
        expect(2);
        m.strategy = StrategyKind::FusionMax;
        m.first = args[0];
        m.second = args[1];
    } else if (kind == "fusion_guided") {
        expect(3);
        m.strategy = StrategyKind::FusionGuided;
        m.orienter = args[0];
        m.main = args[1];
        m.aux = args[2];
    } else {
        throw ConfigError("method '" + name + "': unknown strategy \"" + kind + "\"");
    }
    return m;
}

const BackendSpec* RunConfig::backend(const std::string& name) const {
    auto it = std::find_if(backends.begin(), backends.end(),
                           [&](const auto& b) { return b.name == name; });
    return it == backends.end() ? nullptr : &*it;
}

const MethodSpec* RunConfig::method(const std::string& name) const {
    auto it = std::find_if(methods.begin(), methods.end(),
                           [&](const auto& m) { return m.name == name; });
    return it == methods.end() ? nullptr : &*it;
}

void validate(const RunConfig& cfg) {
    if (!(cfg.conf_threshold >= 0.0 && cfg.conf_threshold <= 1.0)) {
        throw ConfigError("conf_threshold must lie in [0, 1]");
    }
    if (cfg.workers < 1) throw ConfigError("workers must be at least 1");
    if (cfg.methods.empty()) throw ConfigError("no methods configured");
    std::set<std::string> backends;
    for (const auto& b : cfg.backends) {
        if (!backends.insert(b.name).second) throw ConfigError("duplicate backend '" + b.name + "'");
    }
    std::set<std::string> seen;
    auto need_backend = [&](const MethodSpec& m, const std::string& b) {
        if (!backends.count(b)) {
            throw ConfigError("method '" + m.name + "' refers to undefined backend '" + b + "'");
        }
    };
    auto need_method = [&](const MethodSpec& m, const std::string& ref) {
        if (!seen.count(ref)) {
            throw ConfigError("method '" + m.name + "' refers to '" + ref +
                              "', which is not a method listed before it");
        }
    };
    for (const auto& m : cfg.methods) {
        switch (m.strategy) {
            case StrategyKind::Direct:
            case StrategyKind::Orient4: need_backend(m, m.backend); break;
            case StrategyKind::FusionMax:
                need_method(m, m.first);
                need_method(m, m.second);
                break;
            case StrategyKind::FusionGuided:
                need_backend(m, m.orienter);
                need_backend(m, m.main);
                need_method(m, m.aux);
                break;
        }
        if (!seen.insert(m.name).second) throw ConfigError("duplicate method '" + m.name + "'");
    }
}

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw ConfigError("run config must be a JSON object");
    RunConfig cfg;
    try {
        cfg.annotations = resolve(base_dir, doc.at("annotations").get<std::string>());
        cfg.image_root = doc.contains("image_root")
                             ? resolve(base_dir, doc["image_root"].get<std::string>())
                             : cfg.annotations.parent_path();
        cfg.conf_threshold = doc.value("conf_threshold", kDefaultConfidenceThreshold);
        cfg.output_dir = resolve(base_dir, doc.value("output", std::string("report")));
        cfg.workers = doc.value("workers", 1);
        cfg.seed = doc.value("seed", std::uint64_t{0});
        cfg.exclude_io_from_timing = doc.value("exclude_io_from_timing", false);
        if (doc.contains("temp_dir")) {
            cfg.temp_dir = resolve(base_dir, doc["temp_dir"].get<std::string>());
        }

        const json& backends = doc.at("backends");
        if (!backends.is_object()) throw ConfigError("\"backends\" must be an object");
        for (const auto& [name, spec] : backends.items()) {
            BackendSpec b;
            b.name = name;
            if (!spec.is_object() || spec.size() < 1) {
                throw ConfigError("backend '" + name + "' must be {mock|file|proc: ...}");
            }
            if (spec.contains("mock")) {
                b.kind = BackendKind::Mock;
                json profile = spec["mock"];
                if (profile.is_object() && !profile.contains("seed")) profile["seed"] = cfg.seed;
                b.mock = mock_profile_from_json(profile);
            } else if (spec.contains("file")) {
                b.kind = BackendKind::File;
                b.file = resolve(base_dir, spec["file"].get<std::string>());
            } else if (spec.contains("proc")) {
                b.kind = BackendKind::Subprocess;
                const json& cmd = spec["proc"];
                if (cmd.is_string()) {
                    b.command = {cmd.get<std::string>()};
                } else {
                    b.command = cmd.get<std::vector<std::string>>();
                }
                if (b.command.empty()) throw ConfigError("backend '" + name + "': empty command");
                if (spec.contains("timeout_ms")) {
                    b.timeout = std::chrono::milliseconds(spec["timeout_ms"].get<long>());
                }
            } else {
                throw ConfigError("backend '" + name + "' must be one of mock, file, proc");
            }
            cfg.backends.push_back(std::move(b));
        }

        const json& methods = doc.at("methods");
        if (!methods.is_array()) throw ConfigError("\"methods\" must be an array");
        for (const json& m : methods) {
            cfg.methods.push_back(
                parse_method(m.at("name").get<std::string>(), m.at("strategy").get<std::string>()));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("run config: ") + e.what());
    }
    validate(cfg);
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    json doc;
    try {
        doc = read_json_file(path);
    } catch (const ParseError& e) {
        throw ConfigError(e.what());
    }
    const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    return parse_run_config(doc, base);
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec,
                                      std::shared_ptr<const Dataset> truth) {
    switch (spec.kind) {
        case BackendKind::Mock:
            return std::make_unique<MockBackend>(spec.name, spec.mock, std::move(truth));
        case BackendKind::File:
            return std::make_unique<FileBackend>(FileBackend::load(spec.file));
        case BackendKind::Subprocess:
            return std::make_unique<SubprocessBackend>(spec.command, spec.timeout);
    }
    return nullptr;
}

std::size_t MethodRun::n_failed() const {
    return static_cast<std::size_t>(
        std::count_if(results.begin(), results.end(), [](const auto& r) { return r.failed(); }));
}

std::size_t EvaluationRun::n_failures() const {
    std::size_t n = 0;
    for (const auto& m : methods) n += m.n_failed();
    return n;
}

namespace {

// Backends for one worker. Mock and file backends are read-only and shared
// across workers; subprocess channels are created per worker on first use.
class WorkerBackends {
public:
    WorkerBackends(const RunConfig& cfg, const std::map<std::string, Backend*>& shared,
                   std::shared_ptr<const Dataset> truth)
        : cfg_(cfg), shared_(shared), truth_(std::move(truth)) {}

    Backend& get(const std::string& name) {
        if (auto it = shared_.find(name); it != shared_.end()) return *it->second;
        auto& slot = owned_[name];
        if (!slot) slot = make_backend(*cfg_.backend(name), truth_);
        return *slot;
    }

    const std::map<std::string, std::unique_ptr<Backend>>& owned() const { return owned_; }

private:
    const RunConfig& cfg_;
    const std::map<std::string, Backend*>& shared_;
    std::shared_ptr<const Dataset> truth_;
    std::map<std::string, std::unique_ptr<Backend>> owned_;
};

void run_image(const RunConfig& cfg, const FaceAnnotation& ann, std::size_t index,
               WorkerBackends& backends, const StrategyOptions& options,
               std::vector<MethodRun>& methods) {
    const ImageInput input = image_input(ann, cfg.image_root);
    std::map<std::string, const MethodImageResult*> done;
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
        const MethodSpec& spec = cfg.methods[m];
        MethodImageResult& slot = methods[m].results[index];
        auto dependency = [&](const std::string& ref) -> const StrategyOutcome& {
            const MethodImageResult* r = done.at(ref);
            if (r->failed()) throw Error("depends on failed method '" + ref + "'");
            return *r->outcome;
        };
        try {
            switch (spec.strategy) {
                case StrategyKind::Direct:
                    slot.outcome = run_direct(backends.get(spec.backend), input, options);
                    break;
                case StrategyKind::Orient4:
                    slot.outcome = run_orient4(backends.get(spec.backend), input, options);
                    break;
                case StrategyKind::FusionMax:
                    slot.outcome = run_fusion_max(dependency(spec.first), dependency(spec.second));
                    break;
                case StrategyKind::FusionGuided: {
                    const StrategyOutcome& aux = dependency(spec.aux);
                    slot.outcome = run_fusion_guided(backends.get(spec.orienter),
                                                     backends.get(spec.main), aux, input, options);
                    break;
                }
            }
        } catch (const std::exception& e) {
            slot.outcome.reset();
            slot.error = e.what();
        }
        done[spec.name] = &slot;
    }
}

std::vector<LandmarkName> merge(std::vector<LandmarkName> a, const std::vector<LandmarkName>& b) {
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
}

}  // namespace

EvaluationRun run_evaluation(const RunConfig& cfg, const Dataset& dataset) {
    validate(cfg);
    auto truth = std::make_shared<const Dataset>(dataset);

    std::vector<std::unique_ptr<Backend>> shared_owned;
    std::map<std::string, Backend*> shared;
    std::map<std::string, std::vector<LandmarkName>> vocab;
    for (const BackendSpec& b : cfg.backends) {
        if (b.kind == BackendKind::Subprocess) continue;
        shared_owned.push_back(make_backend(b, truth));
        shared[b.name] = shared_owned.back().get();
        vocab[b.name] = shared_owned.back()->descriptor().landmark_names;
    }

    EvaluationRun run;
    run.conf_threshold = cfg.conf_threshold;
    run.images = dataset.annotations();
    for (const MethodSpec& m : cfg.methods) {
        MethodRun mr;
        mr.name = m.name;
        mr.strategy = m.strategy_string();
        mr.results.resize(run.images.size());
        run.methods.push_back(std::move(mr));
    }

    StrategyOptions options;
    options.conf_threshold = cfg.conf_threshold;
    options.exclude_io_from_timing = cfg.exclude_io_from_timing;
    options.temp_dir = cfg.temp_dir.empty() ? default_temp_dir() : cfg.temp_dir;

    const bool temp_existed = std::filesystem::exists(options.temp_dir);
    std::atomic<std::size_t> next{0};
    std::mutex vocab_mutex;
    auto worker = [&] {
        WorkerBackends backends(cfg, shared, truth);
        for (std::size_t i = next++; i < run.images.size(); i = next++) {
            run_image(cfg, run.images[i], i, backends, options, run.methods);
        }
        std::lock_guard lock(vocab_mutex);
        for (const auto& [name, backend] : backends.owned()) {
            if (backend) vocab.emplace(name, backend->descriptor().landmark_names);
        }
    };
    const std::size_t n_workers =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), std::max<std::size_t>(1, run.images.size()));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
    if (!temp_existed) {
        std::error_code ec;
        std::filesystem::remove(options.temp_dir, ec);  // only succeeds when empty
    }

    std::map<std::string, std::vector<LandmarkName>> method_vocab;
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
        const MethodSpec& spec = cfg.methods[m];
        std::vector<LandmarkName> v;
        switch (spec.strategy) {
            case StrategyKind::Direct:
            case StrategyKind::Orient4: v = vocab[spec.backend]; break;
            case StrategyKind::FusionMax:
                v = merge(method_vocab[spec.first], method_vocab[spec.second]);
                break;
            case StrategyKind::FusionGuided: v = merge(vocab[spec.main], method_vocab[spec.aux]); break;
        }
        method_vocab[spec.name] = v;
        run.methods[m].vocabulary = std::move(v);
    }
    return run;
}

// ---------------------------------------------------------------------------
// Records file

json records_to_json(const EvaluationRun& run) {
    json images = json::array();
    for (const FaceAnnotation& a : run.images) {
        images.push_back({{"id", a.image_id},
                          {"width", a.dims.w},
                          {"height", a.dims.h},
                          {"face", bbox_to_json_object(a.face)},
                          {"landmarks", landmarks_to_json(a.landmarks)}});
    }
    json methods = json::array();
    for (const MethodRun& m : run.methods) {
        json outcomes = json::array();
        for (std::size_t i = 0; i < m.results.size(); ++i) {
            const MethodImageResult& r = m.results[i];
            if (r.failed()) {
                outcomes.push_back({{"image_id", run.images[i].image_id}, {"error", r.error}});
                continue;
            }
            const StrategyOutcome& o = *r.outcome;
            outcomes.push_back(
                {{"image_id", o.image_id},
                 {"detection", o.detection ? detection_to_json(*o.detection) : json(nullptr)},
                 {"orientation", std::string(to_string(o.chosen_orientation))},
                 {"source", o.source_backend},
                 {"elapsed_s", o.elapsed_s},
                 {"backend_calls", o.backend_calls},
                 {"clamped", o.clamped}});
        }
        methods.push_back({{"name", m.name},
                           {"strategy", m.strategy},
                           {"landmarks", landmark_names_to_json(m.vocabulary)},
                           {"outcomes", std::move(outcomes)}});
    }
    return {{"version", 1},
            {"conf_threshold", run.conf_threshold},
            {"images", std::move(images)},
            {"methods", std::move(methods)}};
}

EvaluationRun records_from_json(const json& doc) {
    EvaluationRun run;
    try {
        if (doc.at("version").get<int>() != 1) throw ParseError("unsupported records version");
        run.conf_threshold = doc.at("conf_threshold").get<double>();
        std::map<std::string, std::size_t> index;
        for (const json& img : doc.at("images")) {
            FaceAnnotation a;
            a.image_id = img.at("id").get<std::string>();
            a.subject_id = a.image_id;
            a.dims = {img.at("width").get<int>(), img.at("height").get<int>()};
            a.face = bbox_from_json_object(img.at("face"));
            a.landmarks = landmarks_from_json(img.at("landmarks"));
            index[a.image_id] = run.images.size();
            run.images.push_back(std::move(a));
        }
        for (const json& m : doc.at("methods")) {
            MethodRun mr;
            mr.name = m.at("name").get<std::string>();
            mr.strategy = m.value("strategy", std::string{});
            mr.vocabulary = landmark_names_from_json(m.value("landmarks", json::array()));
            mr.results.resize(run.images.size());
            for (const json& o : m.at("outcomes")) {
                const std::string id = o.at("image_id").get<std::string>();
                auto it = index.find(id);
                if (it == index.end()) throw ParseError("outcome for unknown image '" + id + "'");
                MethodImageResult& r = mr.results[it->second];
                if (o.contains("error")) {
                    r.error = o["error"].get<std::string>();
                    continue;
                }
                StrategyOutcome so;
                so.image_id = id;
                if (!o.at("detection").is_null()) so.detection = detection_from_json(o["detection"]);
                auto orient = parse_orientation(o.at("orientation").get<std::string>());
                if (!orient) throw ParseError("bad orientation for '" + id + "'");
                so.chosen_orientation = *orient;
                so.source_backend = o.value("source", std::string{});
                so.elapsed_s = o.at("elapsed_s").get<double>();
                so.backend_calls = o.at("backend_calls").get<int>();
                so.clamped = o.value("clamped", false);
                r.outcome = std::move(so);
            }
            for (std::size_t i = 0; i < mr.results.size(); ++i) {
                if (mr.results[i].failed() && mr.results[i].error.empty()) {
                    throw ParseError("method '" + mr.name + "' has no outcome for '" +
                                     run.images[i].image_id + "'");
                }
            }
            run.methods.push_back(std::move(mr));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("records file: ") + e.what());
    }
    return run;
}

}  // namespace neoface
