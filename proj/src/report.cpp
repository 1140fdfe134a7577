#include "neoface/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "neoface/json_io.hpp"

namespace neoface {

using nlohmann::json;

std::vector<ImageEvalRecord> eval_records(const EvaluationRun& run, std::size_t method_index) {
    const MethodRun& m = run.methods.at(method_index);
    std::vector<ImageEvalRecord> out;
    for (std::size_t i = 0; i < run.images.size(); ++i) {
        const MethodImageResult& r = m.results[i];
        if (r.failed()) continue;
        out.push_back(evaluate_image(*r.outcome, run.images[i]));
    }
    return out;
}

namespace {

std::optional<SignificanceResult> test_or_absent(const std::vector<double>& a,
                                                 const std::vector<double>& b, Alternative alt,
                                                 const std::string& name_a,
                                                 const std::string& name_b) {
    if (a.empty()) return std::nullopt;
    try {
        auto r = wilcoxon_signed_rank(a, b, alt);
        r.method_a = name_a;
        r.method_b = name_b;
        return r;
    } catch (const NoInformationError&) {
        return std::nullopt;
    }
}

// Records indexed by image position (nullptr where the method failed).
std::vector<std::optional<ImageEvalRecord>> aligned_records(const EvaluationRun& run,
                                                            std::size_t m) {
    std::vector<std::optional<ImageEvalRecord>> out(run.images.size());
    for (std::size_t i = 0; i < run.images.size(); ++i) {
        const auto& r = run.methods[m].results[i];
        if (!r.failed()) out[i] = evaluate_image(*r.outcome, run.images[i]);
    }
    return out;
}

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string fixed(const std::optional<double>& v, int decimals) {
    return v ? fixed(*v, decimals) : "NA";
}

std::string pvalue(double p) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", p);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

std::string md_cell(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '|') out += '\\';
        out += c;
    }
    return out;
}

std::string mne_cell(const std::optional<MneValue>& v, bool with_n) {
    if (!v) return "NA";
    std::string s = fixed(v->value, 3);
    if (with_n) s += " (n=" + std::to_string(v->n_pairs) + ")";
    return s;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json matrix_to_json(const SignificanceMatrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.methods.size(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.methods.size(); ++j) {
            const auto& c = m.cells[i][j];
            if (!c) {
                row.push_back(nullptr);
                continue;
            }
            row.push_back({{"p_value", c->p_value},
                           {"statistic", c->statistic},
                           {"n_effective", c->n_effective},
                           {"exact", c->exact},
                           {"row_better", c->a_better}});
        }
        rows.push_back(std::move(row));
    }
    return {{"methods", m.methods}, {"cells", std::move(rows)}};
}

void write_text(const std::string& text, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Error("cannot write " + path.string());
}

}  // namespace

FullReport build_report(const EvaluationRun& run) {
    FullReport rep;
    rep.conf_threshold = run.conf_threshold;
    const std::size_t n = run.methods.size();
    std::vector<std::vector<std::optional<ImageEvalRecord>>> aligned;
    for (std::size_t m = 0; m < n; ++m) {
        aligned.push_back(aligned_records(run, m));
        std::vector<ImageEvalRecord> records;
        for (const auto& r : aligned.back()) {
            if (r) records.push_back(*r);
        }
        EvalReport row;
        if (records.empty()) {
            row.method = run.methods[m].name;
            row.empty_rate = 100.0;
            row.landmark_empty_rate = 100.0;
            row.n_errors = run.methods[m].n_failed();
        } else {
            row = aggregate_report(records, run.methods[m].name, run.methods[m].n_failed());
        }
        rep.rows.push_back(std::move(row));
        rep.vocabularies.push_back(run.methods[m].vocabulary);
    }

    for (SignificanceMatrix* mat : {&rep.iou, &rep.nme}) {
        for (const auto& m : run.methods) mat->methods.push_back(m.name);
        mat->cells.assign(n, std::vector<std::optional<SignificanceResult>>(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            std::vector<double> iou_a, iou_b, err_a, err_b;
            for (std::size_t k = 0; k < run.images.size(); ++k) {
                const auto& ra = aligned[i][k];
                const auto& rb = aligned[j][k];
                if (!ra || !rb) continue;
                if (ra->iou && rb->iou) {
                    iou_a.push_back(*ra->iou);
                    iou_b.push_back(*rb->iou);
                }
                for (LandmarkName l : kAllLandmarks) {
                    if (ra->error_of(l) && rb->error_of(l)) {
                        err_a.push_back(*ra->error_of(l));
                        err_b.push_back(*rb->error_of(l));
                    }
                }
            }
            const auto& na = run.methods[i].name;
            const auto& nb = run.methods[j].name;
            rep.iou.cells[i][j] = test_or_absent(iou_a, iou_b, Alternative::Greater, na, nb);
            rep.nme.cells[i][j] = test_or_absent(err_a, err_b, Alternative::Less, na, nb);
        }
    }
    return rep;
}

std::string render_detection_csv(const FullReport& r) {
    std::string out = "Method,AP50 (%),mAP (%),Empty (%),Time (ms)\n";
    for (const auto& row : r.rows) {
        out += csv_field(row.method) + "," + fixed(row.ap50, 1) + "," + fixed(row.map, 1) + "," +
               fixed(row.empty_rate, 1) + "," + fixed(row.mean_time_ms, 0) + "\n";
    }
    return out;
}

std::string render_landmark_csv(const FullReport& r) {
    std::string out = "Method,All,Eyes,Nose,Mouth,Empty (%)\n";
    for (const auto& row : r.rows) {
        out += csv_field(row.method);
        for (LandmarkGroup g : kAllGroups) out += "," + mne_cell(row.mne_of(g), false);
        out += "," + fixed(row.landmark_empty_rate, 1) + "\n";
    }
    return out;
}

std::string render_significance_csv(const SignificanceMatrix& m) {
    std::string out = "Method";
    for (const auto& name : m.methods) out += "," + csv_field(name);
    out += "\n";
    for (std::size_t i = 0; i < m.methods.size(); ++i) {
        out += csv_field(m.methods[i]);
        for (std::size_t j = 0; j < m.methods.size(); ++j) {
            if (i == j) {
                out += ",-";
            } else {
                out += "," + (m.cells[i][j] ? pvalue(m.cells[i][j]->p_value) : std::string("NA"));
            }
        }
        out += "\n";
    }
    return out;
}

namespace {

void markdown_matrix(std::ostringstream& md, const SignificanceMatrix& m) {
    md << "| Method |";
    for (const auto& name : m.methods) md << ' ' << md_cell(name) << " |";
    md << "\n|---|";
    for (std::size_t j = 0; j < m.methods.size(); ++j) md << "---|";
    md << '\n';
    for (std::size_t i = 0; i < m.methods.size(); ++i) {
        md << "| " << md_cell(m.methods[i]) << " |";
        for (std::size_t j = 0; j < m.methods.size(); ++j) {
            if (i == j) {
                md << " - |";
            } else if (const auto& c = m.cells[i][j]) {
                md << ' ' << pvalue(c->p_value) << " (n=" << c->n_effective << ") |";
            } else {
                md << " NA |";
            }
        }
        md << '\n';
    }
}

}  // namespace

std::string render_markdown(const FullReport& r) {
    std::ostringstream md;
    md << "# Face detection\n\n";
    md << "| Method | AP50 (%) | mAP (%) | Empty (%) | Time (ms) |\n";
    md << "|---|---|---|---|---|\n";
    for (const auto& row : r.rows) {
        md << "| " << md_cell(row.method) << " | " << fixed(row.ap50, 1) << " | "
           << fixed(row.map, 1) << " | " << fixed(row.empty_rate, 1) << " | "
           << fixed(row.mean_time_ms, 0) << " |\n";
    }
    md << "\nAP is precision over images with a detection; images without one count only "
          "toward Empty. Confidence threshold "
       << fixed(r.conf_threshold, 2) << ". Time is mean milliseconds per image.\n";

    md << "\n# Facial landmarks\n\n";
    md << "| Method | All | Eyes | Nose | Mouth | Empty (%) |\n";
    md << "|---|---|---|---|---|---|\n";
    for (const auto& row : r.rows) {
        md << "| " << md_cell(row.method);
        for (LandmarkGroup g : kAllGroups) md << " | " << mne_cell(row.mne_of(g), true);
        md << " | " << fixed(row.landmark_empty_rate, 1) << " |\n";
    }
    md << "\nMean normalized error; n counts the (image, landmark) pairs averaged. Each method "
          "is scored on the landmarks it emits:\n\n";
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        md << "- " << md_cell(r.rows[i].method) << ": ";
        const auto& v = r.vocabularies[i];
        if (v.empty()) md << "(none)";
        for (std::size_t k = 0; k < v.size(); ++k) md << (k ? ", " : "") << to_string(v[k]);
        md << '\n';
    }

    bool any_errors = false;
    for (const auto& row : r.rows) any_errors = any_errors || row.n_errors > 0;
    if (any_errors) {
        md << "\nBackend failures (excluded from every column):\n\n";
        for (const auto& row : r.rows) {
            if (row.n_errors > 0) md << "- " << md_cell(row.method) << ": " << row.n_errors << " image(s)\n";
        }
    }

    md << "\n# Significance: IoU\n\nOne-sided paired Wilcoxon signed-rank p-values that the row "
          "method has higher IoU than the column method, over images both detected.\n\n";
    markdown_matrix(md, r.iou);
    md << "\n# Significance: normalized error\n\nOne-sided paired Wilcoxon signed-rank p-values "
          "that the row method has lower error than the column method, over (image, landmark) "
          "pairs both produced.\n\n";
    markdown_matrix(md, r.nme);
    return md.str();
}

json report_to_json(const FullReport& r) {
    json rows = json::array();
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        const auto& row = r.rows[i];
        json mne = json::object();
        for (LandmarkGroup g : kAllGroups) {
            const auto& v = row.mne_of(g);
            mne[std::string(to_string(g))] =
                v ? json{{"value", v->value}, {"n_pairs", v->n_pairs}} : json(nullptr);
        }
        rows.push_back({{"method", row.method},
                        {"ap50", optional_number(row.ap50)},
                        {"map", optional_number(row.map)},
                        {"empty_rate", row.empty_rate},
                        {"landmark_empty_rate", row.landmark_empty_rate},
                        {"mean_time_ms", row.mean_time_ms},
                        {"mne", std::move(mne)},
                        {"n_images", row.n_images},
                        {"n_errors", row.n_errors},
                        {"landmarks", landmark_names_to_json(r.vocabularies[i])}});
    }
    return {{"conf_threshold", r.conf_threshold},
            {"rows", std::move(rows)},
            {"significance_iou", matrix_to_json(r.iou)},
            {"significance_nme", matrix_to_json(r.nme)}};
}

void write_report(const FullReport& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text(render_detection_csv(r), dir / "detection.csv");
    write_text(render_landmark_csv(r), dir / "landmarks.csv");
    write_text(render_significance_csv(r.iou), dir / "significance_iou.csv");
    write_text(render_significance_csv(r.nme), dir / "significance_nme.csv");
    write_text(render_markdown(r), dir / "report.md");
    write_json_file(report_to_json(r), dir / "report.json");
}

}  // namespace neoface
