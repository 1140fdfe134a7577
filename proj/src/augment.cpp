#include "neoface/augment.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "neoface/json_io.hpp"
#include "neoface/rng.hpp"

namespace neoface {

using nlohmann::json;

void validate(const AugmentConfig& cfg) {
    auto unit = [](double v, const char* what) {
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(what) + " must lie in [0, 1]");
    };
    unit(cfg.flip_prob, "flip_prob");
    unit(cfg.hue_frac, "hue_frac");
    unit(cfg.sat_frac, "sat_frac");
    unit(cfg.val_frac, "val_frac");
    unit(cfg.translate_frac, "translate_frac");
    // A full -100% scale would collapse the image to a point.
    if (!(cfg.scale_frac >= 0.0 && cfg.scale_frac < 1.0)) {
        throw ConfigError("scale_frac must lie in [0, 1)");
    }
}

AugmentConfig augment_config_from_json(const json& v) {
    if (!v.is_object()) throw ConfigError("augmentation config must be an object");
    AugmentConfig cfg;
    try {
        auto num = [&](const char* key, double& dst) {
            if (auto it = v.find(key); it != v.end()) dst = number_from_json(*it, key);
        };
        num("flip_prob", cfg.flip_prob);
        num("hue_frac", cfg.hue_frac);
        num("sat_frac", cfg.sat_frac);
        num("val_frac", cfg.val_frac);
        num("translate_frac", cfg.translate_frac);
        num("scale_frac", cfg.scale_frac);
        if (auto it = v.find("fill"); it != v.end()) {
            const int fill = it->get<int>();
            if (fill < 0 || fill > 255) throw ConfigError("fill must be a grey level 0..255");
            cfg.fill = static_cast<std::uint8_t>(fill);
        }
        if (auto it = v.find("seed"); it != v.end()) cfg.seed = it->get<std::uint64_t>();
    } catch (const ParseError& e) {
        throw ConfigError(e.what());
    } catch (const json::exception& e) {
        throw ConfigError(e.what());
    }
    validate(cfg);
    return cfg;
}

json to_json(const AugmentConfig& cfg) {
    return {{"flip_prob", cfg.flip_prob},   {"hue_frac", cfg.hue_frac},
            {"sat_frac", cfg.sat_frac},     {"val_frac", cfg.val_frac},
            {"translate_frac", cfg.translate_frac}, {"scale_frac", cfg.scale_frac},
            {"fill", cfg.fill},             {"seed", cfg.seed}};
}

json to_json(const AugmentParams& p) {
    return {{"flip", p.flip},         {"hue_shift", p.hue_shift}, {"sat_gain", p.sat_gain},
            {"val_gain", p.val_gain}, {"tx", p.tx},               {"ty", p.ty},
            {"scale", p.scale}};
}

AugmentParams augment_params_from_json(const json& v) {
    AugmentParams p;
    p.flip = v.at("flip").get<bool>();
    p.hue_shift = v.at("hue_shift").get<double>();
    p.sat_gain = v.at("sat_gain").get<double>();
    p.val_gain = v.at("val_gain").get<double>();
    p.tx = v.at("tx").get<double>();
    p.ty = v.at("ty").get<double>();
    p.scale = v.at("scale").get<double>();
    return p;
}

AugmentParams draw_params(const AugmentConfig& cfg, FrameDims dims, std::uint64_t draw_seed) {
    validate(cfg);
    Rng rng(draw_seed);
    // Every draw happens unconditionally so the stream layout never depends on
    // the config. Adding 0.0 turns a -0.0 product into +0.0.
    AugmentParams p;
    p.flip = rng.bernoulli(cfg.flip_prob);
    p.hue_shift = rng.uniform(-1.0, 1.0) * cfg.hue_frac + 0.0;
    p.sat_gain = 1.0 + rng.uniform(-1.0, 1.0) * cfg.sat_frac;
    p.val_gain = 1.0 + rng.uniform(-1.0, 1.0) * cfg.val_frac;
    p.tx = rng.uniform(-1.0, 1.0) * cfg.translate_frac * dims.w + 0.0;
    p.ty = rng.uniform(-1.0, 1.0) * cfg.translate_frac * dims.h + 0.0;
    p.scale = 1.0 + rng.uniform(-1.0, 1.0) * cfg.scale_frac;
    return p;
}

Point forward_map(const Point& p, FrameDims dims, const AugmentParams& params) {
    const double cx = dims.w / 2.0;
    const double cy = dims.h / 2.0;
    const double x = params.flip ? dims.w - p.x : p.x;
    return {cx + params.scale * (x - cx) + params.tx, cy + params.scale * (p.y - cy) + params.ty};
}

namespace {

Point inverse_map(const Point& q, FrameDims dims, const AugmentParams& params) {
    const double cx = dims.w / 2.0;
    const double cy = dims.h / 2.0;
    const double x = (q.x - params.tx - cx) / params.scale + cx;
    const double y = (q.y - params.ty - cy) / params.scale + cy;
    return {params.flip ? dims.w - x : x, y};
}

Image warp(const Image& src, const AugmentParams& params, std::uint8_t fill) {
    if (params.geometric_identity()) return src;
    const FrameDims dims = src.dims();
    Image out(dims.w, dims.h, fill);
    for (int v = 0; v < dims.h; ++v) {
        for (int u = 0; u < dims.w; ++u) {
            const Point s = inverse_map({u + 0.5, v + 0.5}, dims, params);
            const double fx = std::floor(s.x);
            const double fy = std::floor(s.y);
            if (fx < 0 || fy < 0 || fx >= dims.w || fy >= dims.h) continue;
            const std::uint8_t* px = src.pixel(static_cast<int>(fx), static_cast<int>(fy));
            out.set(u, v, px[0], px[1], px[2]);
        }
    }
    return out;
}

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double delta = mx - mn;
    v = mx;
    s = mx > 0.0 ? delta / mx : 0.0;
    if (delta == 0.0) {
        h = 0.0;
    } else if (mx == r) {
        h = (g - b) / delta;
    } else if (mx == g) {
        h = 2.0 + (b - r) / delta;
    } else {
        h = 4.0 + (r - g) / delta;
    }
    h /= 6.0;
    if (h < 0.0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
    const double hh = h * 6.0;
    const int sector = static_cast<int>(std::floor(hh)) % 6;
    const double f = hh - std::floor(hh);
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    switch (sector) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

std::uint8_t to_byte(double c) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
}

}  // namespace

void apply_hsv(Image& image, double hue_shift, double sat_gain, double val_gain) {
    if (hue_shift == 0.0 && sat_gain == 1.0 && val_gain == 1.0) return;
    auto bytes = image.bytes();
    for (std::size_t i = 0; i + 2 < bytes.size(); i += 3) {
        double h, s, v;
        rgb_to_hsv(bytes[i] / 255.0, bytes[i + 1] / 255.0, bytes[i + 2] / 255.0, h, s, v);
        h += hue_shift;
        h -= std::floor(h);
        s = std::clamp(s * sat_gain, 0.0, 1.0);
        v = std::clamp(v * val_gain, 0.0, 1.0);
        double r, g, b;
        hsv_to_rgb(h, s, v, r, g, b);
        bytes[i] = to_byte(r);
        bytes[i + 1] = to_byte(g);
        bytes[i + 2] = to_byte(b);
    }
}

AugmentedSample apply_augmentation(const Image& image, const FaceAnnotation& annotation,
                                   const AugmentParams& params, std::uint8_t fill) {
    if (image.dims() != annotation.dims) {
        throw std::invalid_argument("image size " + detail::describe(image.dims()) +
                                    " does not match annotation of '" + annotation.image_id +
                                    "' (" + detail::describe(annotation.dims) + ")");
    }
    if (!(params.scale > 0.0)) throw std::invalid_argument("scale must be positive");
    const FrameDims dims = annotation.dims;

    AugmentedSample out;
    out.applied = params;
    out.annotation = annotation;

    const Point a = forward_map({annotation.face.x, annotation.face.y}, dims, params);
    const Point b = forward_map({annotation.face.right(), annotation.face.bottom()}, dims, params);
    auto face = clip_to_frame(BBox::from_corners(a, b), dims);
    if (!face) {
        throw SampleRejected("face of '" + annotation.image_id + "' left the frame");
    }
    out.annotation.face = *face;

    out.annotation.landmarks = {};
    for (LandmarkName n : kAllLandmarks) {
        const auto& p = annotation.landmarks[n];
        if (!p) continue;
        const Point q = forward_map(*p, dims, params);
        if (!in_frame(q, dims)) continue;
        out.annotation.landmarks.set(params.flip ? mirrored(n) : n, q);
    }

    out.image = warp(image, params, fill);
    apply_hsv(out.image, params.hue_shift, params.sat_gain, params.val_gain);
    return out;
}

AugmentedSample augment_sample(const Image& image, const FaceAnnotation& annotation,
                               const AugmentConfig& cfg, std::uint64_t draw_seed) {
    return apply_augmentation(image, annotation, draw_params(cfg, annotation.dims, draw_seed),
                              cfg.fill);
}

std::uint64_t sample_seed(std::uint64_t master, int epoch, std::string_view image_id, int attempt) {
    std::uint64_t s = combine_seed(master, static_cast<std::uint64_t>(epoch));
    s = combine_seed(s, hash_string(image_id));
    return combine_seed(s, static_cast<std::uint64_t>(attempt));
}

json export_augmented(const Dataset& dataset, const std::filesystem::path& image_root,
                      const AugmentConfig& cfg, int epochs, const std::filesystem::path& out_dir,
                      int max_attempts) {
    validate(cfg);
    if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
    if (max_attempts < 1) throw std::invalid_argument("max_attempts must be at least 1");

    std::vector<std::vector<FaceAnnotation>> per_epoch(static_cast<std::size_t>(epochs));
    std::vector<std::vector<json>> entries(static_cast<std::size_t>(epochs));
    json rejected = json::array();
    json skipped = json::array();

    for (const FaceAnnotation& ann : dataset.annotations()) {
        std::filesystem::path src(ann.image_path);
        if (src.is_relative()) src = image_root / src;
        const Image image = read_image(src);
        for (int e = 0; e < epochs; ++e) {
            const auto epoch_dir = out_dir / ("epoch_" + std::to_string(e));
            bool done = false;
            for (int attempt = 0; attempt < max_attempts && !done; ++attempt) {
                const std::uint64_t seed = sample_seed(cfg.seed, e, ann.image_id, attempt);
                try {
                    AugmentedSample s = augment_sample(image, ann, cfg, seed);
                    const std::string rel = "images/" + ann.image_id + ".png";
                    write_image(s.image, epoch_dir / rel);
                    s.annotation.image_path = rel;
                    per_epoch[static_cast<std::size_t>(e)].push_back(std::move(s.annotation));
                    entries[static_cast<std::size_t>(e)].push_back(
                        {{"epoch", e},
                         {"image_id", ann.image_id},
                         {"seed", seed},
                         {"attempt", attempt},
                         {"applied", to_json(s.applied)}});
                    done = true;
                } catch (const SampleRejected&) {
                    rejected.push_back({{"epoch", e}, {"image_id", ann.image_id}, {"seed", seed}});
                }
            }
            if (!done) skipped.push_back({{"epoch", e}, {"image_id", ann.image_id}});
        }
    }

    json all_entries = json::array();
    for (int e = 0; e < epochs; ++e) {
        const auto idx = static_cast<std::size_t>(e);
        save_annotations(per_epoch[idx],
                         out_dir / ("epoch_" + std::to_string(e)) / "annotations.json");
        for (auto& entry : entries[idx]) all_entries.push_back(std::move(entry));
    }
    json manifest = {{"version", 1},
                     {"config", to_json(cfg)},
                     {"epochs", epochs},
                     {"entries", std::move(all_entries)},
                     {"rejected", std::move(rejected)},
                     {"skipped", std::move(skipped)}};
    write_json_file(manifest, out_dir / "manifest.json");
    return manifest;
}

}  // namespace neoface
