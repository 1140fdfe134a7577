#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <sstream>

#include <nlohmann/json.hpp>

#include "neoface/augment.hpp"
#include "neoface/backends.hpp"
#include "neoface/datamodel.hpp"
#include "neoface/evaluate.hpp"
#include "neoface/geometry.hpp"
#include "neoface/image.hpp"
#include "neoface/json_io.hpp"
#include "neoface/metrics.hpp"
#include "neoface/report.hpp"
#include "neoface/strategies.hpp"

namespace py = pybind11;
using namespace neoface;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// JSON <-> Python

py::object to_py(const json& v) {
    switch (v.type()) {
        case json::value_t::null: return py::none();
        case json::value_t::boolean: return py::bool_(v.get<bool>());
        case json::value_t::number_integer: return py::int_(v.get<std::int64_t>());
        case json::value_t::number_unsigned: return py::int_(v.get<std::uint64_t>());
        case json::value_t::number_float: return py::float_(v.get<double>());
        case json::value_t::string: return py::str(v.get<std::string>());
        case json::value_t::array: {
            py::list out;
            for (const json& e : v) out.append(to_py(e));
            return out;
        }
        case json::value_t::object: {
            py::dict out;
            for (const auto& [k, e] : v.items()) out[py::str(k)] = to_py(e);
            return out;
        }
        default: throw py::type_error("unsupported JSON value");
    }
}

json from_py(const py::handle& o) {
    if (o.is_none()) return nullptr;
    if (py::isinstance<py::bool_>(o)) return o.cast<bool>();
    if (py::isinstance<py::int_>(o)) return o.cast<std::int64_t>();
    if (py::isinstance<py::float_>(o)) return o.cast<double>();
    if (py::isinstance<py::str>(o)) return o.cast<std::string>();
    if (py::isinstance<py::dict>(o)) {
        json out = json::object();
        for (const auto& [k, v] : o.cast<py::dict>()) out[py::str(k).cast<std::string>()] = from_py(v);
        return out;
    }
    if (py::isinstance<py::list>(o) || py::isinstance<py::tuple>(o)) {
        json out = json::array();
        for (const auto& e : o) out.push_back(from_py(e));
        return out;
    }
    if (py::hasattr(o, "item")) return from_py(o.attr("item")());  // numpy scalars
    throw py::type_error("cannot convert " + py::repr(o).cast<std::string>() + " to JSON");
}

// ---------------------------------------------------------------------------
// Records

py::dict annotation_to_py(const FaceAnnotation& a) {
    return to_py(annotations_to_json({a})["images"][0]);
}

FaceAnnotation annotation_from_py(const py::dict& d) {
    json doc = {{"version", 1}, {"images", json::array({from_py(d)})}};
    return parse_annotations(doc).annotations().front();
}

py::list detections_to_py(const std::vector<Detection>& ds) { return to_py(detections_to_json(ds)); }

json outcome_to_json(const StrategyOutcome& o) {
    return {{"image_id", o.image_id},
            {"detection", o.detection ? detection_to_json(*o.detection) : json(nullptr)},
            {"orientation", std::string(to_string(o.chosen_orientation))},
            {"source", o.source_backend},
            {"elapsed_s", o.elapsed_s},
            {"backend_calls", o.backend_calls},
            {"clamped", o.clamped}};
}

StrategyOutcome outcome_from_json(const json& v) {
    StrategyOutcome o;
    o.image_id = v.at("image_id").get<std::string>();
    if (!v.value("detection", json()).is_null()) o.detection = detection_from_json(v["detection"]);
    if (v.contains("orientation")) {
        const auto orient = parse_orientation(v["orientation"].get<std::string>());
        if (!orient) throw ParseError("bad orientation");
        o.chosen_orientation = *orient;
    }
    o.source_backend = v.value("source", std::string{});
    o.elapsed_s = v.value("elapsed_s", 0.0);
    o.backend_calls = v.value("backend_calls", 0);
    o.clamped = v.value("clamped", false);
    return o;
}

std::vector<ImageEvalRecord> records_from_ious(const std::vector<std::optional<double>>& ious) {
    std::vector<ImageEvalRecord> out;
    for (std::size_t i = 0; i < ious.size(); ++i) {
        ImageEvalRecord r;
        r.image_id = std::to_string(i);
        r.iou = ious[i];
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Images as H x W x 3 uint8 arrays

using ImageArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Image image_from_array(const ImageArray& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw py::value_error("expected an H x W x 3 uint8 array");
    Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::memcpy(img.bytes().data(), a.data(), img.bytes().size());
    return img;
}

ImageArray image_to_array(const Image& img) {
    ImageArray out({img.height(), img.width(), 3});
    std::memcpy(out.mutable_data(), img.bytes().data(), img.bytes().size());
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation

EvaluationRun records_from_py(const py::dict& records) { return records_from_json(from_py(records)); }

RunConfig config_from(const std::filesystem::path& path, std::optional<int> workers,
                      std::optional<double> conf_threshold, std::optional<std::uint64_t> seed) {
    json doc;
    try {
        doc = read_json_file(path);
    } catch (const ParseError& e) {
        throw ConfigError(e.what());
    }
    if (seed && doc.is_object()) doc["seed"] = *seed;
    const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    RunConfig cfg = parse_run_config(doc, base);
    if (workers) cfg.workers = *workers;
    if (conf_threshold) cfg.conf_threshold = *conf_threshold;
    validate(cfg);
    return cfg;
}

std::string render(const FullReport& r, const std::string& table) {
    if (table == "detection") return render_detection_csv(r);
    if (table == "landmarks") return render_landmark_csv(r);
    if (table == "significance_iou") return render_significance_csv(r.iou);
    if (table == "significance_nme") return render_significance_csv(r.nme);
    if (table == "markdown") return render_markdown(r);
    throw py::value_error("unknown table '" + table + "'");
}

Alternative alternative_from(const std::string& s) {
    if (s == "greater") return Alternative::Greater;
    if (s == "less") return Alternative::Less;
    throw py::value_error("alternative must be 'greater' or 'less'");
}

FrameDims dims_from(std::pair<int, int> wh) { return {wh.first, wh.second}; }

}  // namespace

PYBIND11_MODULE(_neoface, m) {
    m.doc() = "Neonatal face and landmark detection benchmarking toolkit";

    // Errors -----------------------------------------------------------------
    // Translators run newest first, so the base class is registered first.
    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<GeometryError>(m, "GeometryError", base);
    py::register_exception<ParseError>(m, "ParseError", base);
    py::register_exception<ConfigError>(m, "ConfigError", base);
    py::register_exception<BackendError>(m, "BackendError", base);
    py::register_exception<SampleRejected>(m, "SampleRejected", base);
    py::register_exception<NoInformationError>(m, "NoInformationError", base);
    auto validation = py::register_exception<ValidationError>(m, "ValidationError", base);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ValidationError& e) {
            py::object cls = py::module_::import("neoface._neoface").attr("ValidationError");
            py::object instance = cls(e.what());
            instance.attr("violations") = py::cast(e.violations());
            PyErr_SetObject(cls.ptr(), instance.ptr());
        }
    });
    (void)validation;

    // Geometry ---------------------------------------------------------------
    py::enum_<Orientation>(m, "Orientation")
        .value("R0", Orientation::R0)
        .value("R90", Orientation::R90)
        .value("R180", Orientation::R180)
        .value("R270", Orientation::R270);
    m.def("compose", &compose, py::arg("first"), py::arg("then"));
    m.def("inverse", &inverse);
    m.def("all_orientations", [] { return std::vector<Orientation>(kAllOrientations.begin(), kAllOrientations.end()); });

    py::class_<Point>(m, "Point")
        .def(py::init([](double x, double y) { return Point{x, y}; }), py::arg("x"), py::arg("y"))
        .def_readwrite("x", &Point::x)
        .def_readwrite("y", &Point::y)
        .def(py::self == py::self)
        .def("__repr__", [](const Point& p) { return "Point" + detail::describe(p); });

    py::class_<BBox>(m, "BBox")
        .def(py::init([](double x, double y, double w, double h) { return BBox{x, y, w, h}; }),
             py::arg("x"), py::arg("y"), py::arg("w"), py::arg("h"))
        .def_static("from_corners", &BBox::from_corners, py::arg("a"), py::arg("b"))
        .def_readwrite("x", &BBox::x)
        .def_readwrite("y", &BBox::y)
        .def_readwrite("w", &BBox::w)
        .def_readwrite("h", &BBox::h)
        .def_property_readonly("area", &BBox::area)
        .def(py::self == py::self)
        .def("__repr__", [](const BBox& b) { return "BBox" + detail::describe(b); });

    m.def("iou", [](const BBox& a, const BBox& b) { return iou(a, b); });
    m.def("rotated_dims", [](std::pair<int, int> wh, Orientation o) {
        const FrameDims d = rotated_dims(dims_from(wh), o);
        return std::make_pair(d.w, d.h);
    });
    m.def("rotate_point", [](const Point& p, std::pair<int, int> wh, Orientation o) {
        return rotate_point(p, dims_from(wh), o);
    });
    m.def("unrotate_point", [](const Point& p, std::pair<int, int> wh, Orientation o) {
        return unrotate_point(p, dims_from(wh), o);
    });
    m.def("rotate_bbox", [](const BBox& b, std::pair<int, int> wh, Orientation o) {
        return rotate_bbox(b, dims_from(wh), o);
    });
    m.def("unrotate_bbox", [](const BBox& b, std::pair<int, int> wh, Orientation o) {
        return unrotate_bbox(b, dims_from(wh), o);
    });

    // Images -----------------------------------------------------------------
    m.def("read_image", [](const std::filesystem::path& p) { return image_to_array(read_image(p)); });
    m.def("write_image", [](const ImageArray& a, const std::filesystem::path& p) {
        write_image(image_from_array(a), p);
    });
    m.def("rotate_image", [](const ImageArray& a, Orientation o) {
        return image_to_array(rotate_image(image_from_array(a), o));
    });

    // Data model -------------------------------------------------------------
    py::class_<Dataset, std::shared_ptr<Dataset>>(m, "Dataset")
        .def(py::init([](const py::dict& doc) { return std::make_shared<Dataset>(parse_annotations(from_py(doc))); }),
             py::arg("document"))
        .def_static("load", [](const std::filesystem::path& p) { return std::make_shared<Dataset>(load_annotations(p)); })
        .def("__len__", &Dataset::size)
        .def("__contains__", [](const Dataset& d, const std::string& id) { return d.find(id) != nullptr; })
        .def("__getitem__", [](const Dataset& d, const std::string& id) { return annotation_to_py(d.at(id)); })
        .def_property_readonly("image_ids", [](const Dataset& d) {
            std::vector<std::string> ids;
            for (const auto& a : d.annotations()) ids.push_back(a.image_id);
            return ids;
        })
        .def_property_readonly("subjects", &Dataset::subjects)
        .def("to_dict", [](const Dataset& d) { return to_py(annotations_to_json(d.annotations())); })
        .def("split", [](const Dataset& d, double fraction, std::uint64_t seed) {
            return to_py(to_json(split_train_test(d, fraction, seed)));
        }, py::arg("test_fraction"), py::arg("seed") = 0)
        .def("kfold", [](const Dataset& d, int k, std::uint64_t seed) {
            return to_py(to_json(kfold(d, k, seed)));
        }, py::arg("k"), py::arg("seed") = 0);

    m.def("landmark_names", [] {
        std::vector<std::string> out;
        for (LandmarkName n : kAllLandmarks) out.emplace_back(to_string(n));
        return out;
    });

    // Backends ---------------------------------------------------------------
    m.def("select_best", [](const py::list& detections, double threshold) -> py::object {
        const auto ds = detections_from_json(from_py(detections));
        const auto best = select_best(ds, threshold);
        return best ? to_py(detection_to_json(*best)) : py::none();
    }, py::arg("detections"), py::arg("conf_threshold") = kDefaultConfidenceThreshold);

    py::class_<Backend, std::shared_ptr<Backend>>(m, "Backend")
        .def_property_readonly("name", [](const Backend& b) { return b.descriptor().name; })
        .def_property_readonly("landmark_names", [](const Backend& b) {
            return to_py(landmark_names_to_json(b.descriptor().landmark_names));
        })
        .def("detect", [](Backend& b, const std::string& image_id, const std::filesystem::path& path,
                          std::pair<int, int> wh, Orientation o) {
            return detections_to_py(b.detect({image_id, path, dims_from(wh), o}));
        }, py::arg("image_id"), py::arg("path"), py::arg("dims"), py::arg("orientation") = Orientation::R0);

    py::class_<MockBackend, Backend, std::shared_ptr<MockBackend>>(m, "MockBackend")
        .def(py::init([](const std::string& name, const py::dict& profile, std::shared_ptr<Dataset> truth) {
            return std::make_shared<MockBackend>(name, mock_profile_from_json(from_py(profile)), truth);
        }), py::arg("name"), py::arg("profile"), py::arg("truth"));

    py::class_<FileBackend, Backend, std::shared_ptr<FileBackend>>(m, "FileBackend")
        .def(py::init([](const std::filesystem::path& p) { return std::make_shared<FileBackend>(FileBackend::load(p)); }),
             py::arg("path"));

    py::class_<SubprocessBackend, Backend, std::shared_ptr<SubprocessBackend>>(m, "SubprocessBackend")
        .def(py::init([](std::vector<std::string> argv, int timeout_ms) {
            return std::make_shared<SubprocessBackend>(std::move(argv), std::chrono::milliseconds(timeout_ms));
        }), py::arg("argv"), py::arg("timeout_ms") = 30000)
        .def("shutdown", &SubprocessBackend::shutdown);

    // Strategies -------------------------------------------------------------
    auto options = [](double threshold, const std::filesystem::path& temp_dir) {
        StrategyOptions o;
        o.conf_threshold = threshold;
        o.temp_dir = temp_dir;
        return o;
    };
    m.def("run_direct", [options](Backend& b, const py::dict& annotation, const std::filesystem::path& root,
                                  double threshold, const std::filesystem::path& temp_dir) {
        const auto in = image_input(annotation_from_py(annotation), root);
        return to_py(outcome_to_json(run_direct(b, in, options(threshold, temp_dir))));
    }, py::arg("backend"), py::arg("annotation"), py::arg("image_root") = "",
       py::arg("conf_threshold") = kDefaultConfidenceThreshold, py::arg("temp_dir") = "");
    m.def("run_orient4", [options](Backend& b, const py::dict& annotation, const std::filesystem::path& root,
                                   double threshold, const std::filesystem::path& temp_dir) {
        const auto in = image_input(annotation_from_py(annotation), root);
        return to_py(outcome_to_json(run_orient4(b, in, options(threshold, temp_dir))));
    }, py::arg("backend"), py::arg("annotation"), py::arg("image_root") = "",
       py::arg("conf_threshold") = kDefaultConfidenceThreshold, py::arg("temp_dir") = "");
    m.def("run_fusion_max", [](const py::dict& a, const py::dict& b) {
        return to_py(outcome_to_json(run_fusion_max(outcome_from_json(from_py(a)), outcome_from_json(from_py(b)))));
    });
    m.def("run_fusion_guided", [options](Backend& orienter, Backend& main, const py::dict& aux,
                                         const py::dict& annotation, const std::filesystem::path& root,
                                         double threshold, const std::filesystem::path& temp_dir) {
        const auto in = image_input(annotation_from_py(annotation), root);
        return to_py(outcome_to_json(run_fusion_guided(orienter, main, outcome_from_json(from_py(aux)), in,
                                                       options(threshold, temp_dir))));
    }, py::arg("orienter"), py::arg("main"), py::arg("aux"), py::arg("annotation"), py::arg("image_root") = "",
       py::arg("conf_threshold") = kDefaultConfidenceThreshold, py::arg("temp_dir") = "");

    // Metrics ----------------------------------------------------------------
    m.def("ap_at", [](const std::vector<std::optional<double>>& ious, double threshold) {
        return ap_at(records_from_ious(ious), threshold);
    }, py::arg("ious"), py::arg("iou_threshold") = 0.5);
    m.def("map_range", [](const std::vector<std::optional<double>>& ious) {
        return map_range(records_from_ious(ious));
    }, py::arg("ious"));
    m.def("empty_rate", [](const std::vector<std::optional<double>>& ious) {
        return empty_rate(records_from_ious(ious));
    }, py::arg("ious"));
    m.def("norm_error", &norm_error, py::arg("estimate"), py::arg("reference"), py::arg("reference_bbox"));
    m.def("wilcoxon_signed_rank", [](const std::vector<double>& a, const std::vector<double>& b,
                                     const std::string& alternative) {
        const SignificanceResult r = wilcoxon_signed_rank(a, b, alternative_from(alternative));
        py::dict out;
        out["statistic"] = r.statistic;
        out["p_value"] = r.p_value;
        out["n_effective"] = r.n_effective;
        out["exact"] = r.exact;
        return out;
    }, py::arg("a"), py::arg("b"), py::arg("alternative") = "greater");

    // Evaluation -------------------------------------------------------------
    m.def("run_evaluation", [](const std::filesystem::path& config, std::optional<int> workers,
                               std::optional<double> conf_threshold, std::optional<std::uint64_t> seed) {
        const RunConfig cfg = config_from(config, workers, conf_threshold, seed);
        EvaluationRun run;
        {
            py::gil_scoped_release release;
            run = run_evaluation(cfg, load_annotations(cfg.annotations));
        }
        return to_py(records_to_json(run));
    }, py::arg("config"), py::arg("workers") = py::none(), py::arg("conf_threshold") = py::none(),
       py::arg("seed") = py::none());
    m.def("build_report", [](const py::dict& records) {
        return to_py(report_to_json(build_report(records_from_py(records))));
    }, py::arg("records"));
    m.def("render_table", [](const py::dict& records, const std::string& table) {
        return render(build_report(records_from_py(records)), table);
    }, py::arg("records"), py::arg("table") = "detection");
    m.def("write_report", [](const py::dict& records, const std::filesystem::path& dir) {
        write_report(build_report(records_from_py(records)), dir);
    }, py::arg("records"), py::arg("out_dir"));

    // Augmentation -----------------------------------------------------------
    m.def("augment_config", [](const py::object& overrides) {
        json doc = overrides.is_none() ? json::object() : from_py(overrides);
        return to_py(to_json(augment_config_from_json(doc)));
    }, py::arg("overrides") = py::none());
    m.def("draw_params", [](const py::dict& cfg, std::pair<int, int> wh, std::uint64_t seed) {
        return to_py(to_json(draw_params(augment_config_from_json(from_py(cfg)), dims_from(wh), seed)));
    }, py::arg("config"), py::arg("dims"), py::arg("seed"));
    auto sample_to_py = [](const AugmentedSample& s) {
        return py::make_tuple(image_to_array(s.image), annotation_to_py(s.annotation), to_py(to_json(s.applied)));
    };
    m.def("apply_augmentation", [sample_to_py](const ImageArray& image, const py::dict& annotation,
                                               const py::dict& params, int fill) {
        return sample_to_py(apply_augmentation(image_from_array(image), annotation_from_py(annotation),
                                               augment_params_from_json(from_py(params)),
                                               static_cast<std::uint8_t>(fill)));
    }, py::arg("image"), py::arg("annotation"), py::arg("params"), py::arg("fill") = 114);
    m.def("augment_sample", [sample_to_py](const ImageArray& image, const py::dict& annotation,
                                           const py::dict& cfg, std::uint64_t seed) {
        return sample_to_py(augment_sample(image_from_array(image), annotation_from_py(annotation),
                                           augment_config_from_json(from_py(cfg)), seed));
    }, py::arg("image"), py::arg("annotation"), py::arg("config"), py::arg("seed"));
    m.def("export_augmented", [](const Dataset& d, const std::filesystem::path& root, const py::dict& cfg,
                                 int epochs, const std::filesystem::path& out_dir) {
        return to_py(export_augmented(d, root, augment_config_from_json(from_py(cfg)), epochs, out_dir));
    }, py::arg("dataset"), py::arg("image_root"), py::arg("config"), py::arg("epochs"), py::arg("out_dir"));
}
