#include "neoface/strategies.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdlib>
#include <system_error>

#include <unistd.h>

#include "neoface/image.hpp"

namespace neoface {

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Per-image working state: lazily decoded pixels and the rotated variants
// written for pixel-consuming backends. Temp files are removed on exit.
class Session {
public:
    Session(const ImageInput& image, const StrategyOptions& options)
        : image_(image), options_(options) {}

    ~Session() {
        std::error_code ec;
        for (const auto& p : written_) {
            if (p) std::filesystem::remove(*p, ec);
        }
    }

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    std::vector<Detection> detect(Backend& backend, Orientation o) {
        ImageRef ref{image_.image_id, image_.path, rotated_dims(image_.dims, o), o};
        if (backend.needs_pixels() && o != Orientation::R0) ref.path = rotated_path(o);
        try {
            return backend.detect(ref);
        } catch (const BackendError& e) {
            throw BackendError(e.kind(), "image '" + image_.image_id + "' at " +
                                             std::string(to_string(o)) + ": " + e.what());
        }
    }

    std::optional<Detection> best(Backend& backend, Orientation o) {
        const auto dets = detect(backend, o);
        return select_best(dets, options_.conf_threshold);
    }

    double io_seconds() const noexcept { return io_seconds_; }

    /// Wall time since `start`, less I/O when the options ask for it.
    double elapsed(Clock::time_point start) const {
        const double total = seconds_since(start);
        return options_.exclude_io_from_timing ? std::max(0.0, total - io_seconds_) : total;
    }

private:
    std::filesystem::path rotated_path(Orientation o) {
        auto& slot = written_[static_cast<std::size_t>(o)];
        if (slot) return *slot;
        const auto start = Clock::now();
        if (!pixels_) {
            pixels_ = read_image(image_.path);
            if (pixels_->dims() != image_.dims) {
                throw Error("image '" + image_.image_id + "' is " +
                            detail::describe(pixels_->dims()) + " on disk but annotated as " +
                            detail::describe(image_.dims));
            }
        }
        const auto dir =
            options_.temp_dir.empty() ? default_temp_dir() : options_.temp_dir;
        std::filesystem::create_directories(dir);
        auto path = dir / (image_.image_id + "_" + std::string(to_string(o)) + ".png");
        write_image(rotate_image(*pixels_, o), path);
        slot = path;
        io_seconds_ += seconds_since(start);
        return path;
    }

    const ImageInput& image_;
    const StrategyOptions& options_;
    std::optional<Image> pixels_;
    std::array<std::optional<std::filesystem::path>, 4> written_{};
    double io_seconds_ = 0.0;
};

struct MappedBack {
    std::optional<Detection> detection;
    bool clamped = false;
};

// Clip to the rotated frame, then undo the rotation. A box with no area left
// inside the frame is dropped.
MappedBack to_original(const Detection& d, FrameDims original, Orientation o) {
    const FrameDims frame = rotated_dims(original, o);
    MappedBack out;
    auto box = clip_to_frame(d.bbox, frame);
    if (!box) {
        out.clamped = true;
        return out;
    }
    out.clamped = !(*box == d.bbox);
    Detection mapped;
    mapped.confidence = d.confidence;
    mapped.bbox = unrotate_bbox(*box, original, o);
    for (LandmarkName n : kAllLandmarks) {
        const auto& p = d.landmarks[n];
        if (!p) continue;
        const Point q = clamp_to_frame(*p, frame);
        if (!(q == *p)) out.clamped = true;
        mapped.landmarks.set(n, unrotate_point(q, original, o));
    }
    out.detection = std::move(mapped);
    return out;
}

StrategyOutcome make_outcome(const ImageInput& image, const Backend& backend,
                             const std::optional<Detection>& best, Orientation o) {
    StrategyOutcome out;
    out.image_id = image.image_id;
    out.source_backend = backend.descriptor().name;
    out.chosen_orientation = o;
    if (best) {
        auto mapped = to_original(*best, image.dims, o);
        out.detection = std::move(mapped.detection);
        out.clamped = mapped.clamped;
    }
    return out;
}

struct SweepResult {
    std::optional<Detection> best;
    Orientation orientation = Orientation::R0;
};

SweepResult sweep(Session& session, Backend& backend) {
    SweepResult r;
    for (Orientation o : kAllOrientations) {
        auto candidate = session.best(backend, o);
        if (candidate && (!r.best || candidate->confidence > r.best->confidence)) {
            r.best = std::move(candidate);
            r.orientation = o;
        }
    }
    return r;
}

}  // namespace

ImageInput image_input(const FaceAnnotation& a, const std::filesystem::path& base_dir) {
    std::filesystem::path p(a.image_path);
    if (!base_dir.empty() && p.is_relative()) p = base_dir / p;
    return {a.image_id, p, a.dims};
}

std::filesystem::path default_temp_dir() {
    if (const char* env = std::getenv("NEOFACE_TMPDIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return std::filesystem::temp_directory_path() /
           ("neoface-" + std::to_string(static_cast<long>(::getpid())));
}

StrategyOutcome run_direct(Backend& backend, const ImageInput& image,
                           const StrategyOptions& options) {
    const auto start = Clock::now();
    Session session(image, options);
    auto best = session.best(backend, Orientation::R0);
    StrategyOutcome out = make_outcome(image, backend, best, Orientation::R0);
    out.backend_calls = 1;
    out.elapsed_s = session.elapsed(start);
    return out;
}

StrategyOutcome run_orient4(Backend& backend, const ImageInput& image,
                            const StrategyOptions& options) {
    const auto start = Clock::now();
    Session session(image, options);
    const SweepResult r = sweep(session, backend);
    StrategyOutcome out = make_outcome(image, backend, r.best, r.orientation);
    out.backend_calls = static_cast<int>(kAllOrientations.size());
    out.elapsed_s = session.elapsed(start);
    return out;
}

StrategyOutcome run_fusion_max(const StrategyOutcome& a, const StrategyOutcome& b) {
    if (a.image_id != b.image_id) {
        throw Error("cannot fuse outcomes of different images ('" + a.image_id + "' and '" +
                    b.image_id + "')");
    }
    const bool take_b = !b.empty() && (a.empty() || b.confidence() > a.confidence());
    StrategyOutcome out = take_b ? b : a;
    out.elapsed_s = a.elapsed_s + b.elapsed_s;
    out.backend_calls = a.backend_calls + b.backend_calls;
    return out;
}

StrategyOutcome run_fusion_guided(Backend& orienter, Backend& main, const StrategyOutcome& aux,
                                  const ImageInput& image, const StrategyOptions& options) {
    if (aux.image_id != image.image_id) {
        throw Error("auxiliary outcome is for '" + aux.image_id + "', not '" + image.image_id +
                    "'");
    }
    const auto start = Clock::now();
    Session session(image, options);
    const Orientation chosen = sweep(session, orienter).orientation;
    auto best = session.best(main, chosen);
    StrategyOutcome guided = make_outcome(image, main, best, chosen);
    guided.backend_calls = static_cast<int>(kAllOrientations.size()) + 1;
    guided.elapsed_s = session.elapsed(start);
    return run_fusion_max(guided, aux);
}

}  // namespace neoface
