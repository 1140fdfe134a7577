#include <doctest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "neoface/augment.hpp"
#include "neoface/json_io.hpp"
#include "test_support.hpp"

using namespace neoface;
using nlohmann::json;

namespace {

FaceAnnotation annotation(FrameDims dims, BBox face) {
    FaceAnnotation a;
    a.image_id = "m";
    a.image_path = "m.png";
    a.subject_id = "s";
    a.dims = dims;
    a.face = face;
    return a;
}

bool is_black(const Image& img, int x, int y) {
    const auto* p = img.pixel(x, y);
    return p[0] == 0 && p[1] == 0 && p[2] == 0;
}

// Any non-background pixel within one pixel of the point.
bool marker_near(const Image& img, const Point& q) {
    const int cx = static_cast<int>(std::floor(q.x));
    const int cy = static_cast<int>(std::floor(q.y));
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
            const int x = cx + dx, y = cy + dy;
            if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) continue;
            if (!is_black(img, x, y)) return true;
        }
    }
    return false;
}

// Independent statement of the geometric map: mirror, scale about the
// centre, shift.
Point replay(const Point& p, FrameDims d, const AugmentParams& a) {
    double x = a.flip ? d.w - p.x : p.x;
    double y = p.y;
    x = d.w / 2.0 + (x - d.w / 2.0) * a.scale;
    y = d.h / 2.0 + (y - d.h / 2.0) * a.scale;
    return {x + a.tx, y + a.ty};
}

}  // namespace

TEST_CASE("identity config leaves the sample untouched") {
    const Dataset d = load_annotations(testing::fixture_dir() / "metric" / "annotations.json");
    const auto& ann = d.at("img1");
    const Image img = read_image(testing::fixture_dir() / "metric" / ann.image_path);
    const AugmentedSample s = augment_sample(img, ann, AugmentConfig::identity(), 123);
    CHECK(s.image == img);
    CHECK(s.annotation == ann);
    CHECK(s.applied == AugmentParams{});
    CHECK(s.applied.geometric_identity());
    CHECK(s.applied.photometric_identity());
}

TEST_CASE("forced flip mirrors positions and swaps sides") {
    FaceAnnotation a = annotation({100, 80}, {20, 20, 30, 30});
    a.landmarks.set(LandmarkName::RightEye, {30, 40});
    a.landmarks.set(LandmarkName::Nose, {50, 45});
    AugmentParams p;
    p.flip = true;
    const auto s = apply_augmentation(Image(100, 80), a, p);
    CHECK(s.annotation.landmarks[LandmarkName::LeftEye] == Point{70, 40});
    CHECK_FALSE(s.annotation.landmarks.contains(LandmarkName::RightEye));
    CHECK(s.annotation.landmarks[LandmarkName::Nose] == Point{50, 45});
    CHECK(s.annotation.face == BBox{50, 20, 30, 30});
}

TEST_CASE("forced shift moves box and pixels together") {
    FaceAnnotation a = annotation({40, 30}, {0, 0, 20, 20});
    Image img(40, 30);
    img.set(5, 5, 255, 255, 255);
    AugmentParams p;
    p.tx = 10;
    const auto s = apply_augmentation(img, a, p, 0);
    CHECK(s.annotation.face == BBox{10, 0, 20, 20});
    for (int y = 0; y < 30; ++y) {
        for (int x = 0; x < 40; ++x) {
            const bool white = !is_black(s.image, x, y);
            CHECK(white == (x == 15 && y == 5));
        }
    }
}

TEST_CASE("flip is an involution on pixels and labels") {
    const Dataset d = load_annotations(testing::fixture_dir() / "metric" / "annotations.json");
    for (const auto& ann : d.annotations()) {
        const Image img = read_image(testing::fixture_dir() / "metric" / ann.image_path);
        AugmentParams p;
        p.flip = true;
        const auto once = apply_augmentation(img, ann, p);
        const auto twice = apply_augmentation(once.image, once.annotation, p);
        CHECK(twice.image == img);
        CHECK(twice.annotation == ann);
        CHECK_FALSE(once.image == img);
        if (ann.landmarks.contains(LandmarkName::RightEye)) {
            CHECK(once.annotation.landmarks[LandmarkName::LeftEye]->x ==
                  ann.dims.w - ann.landmarks[LandmarkName::RightEye]->x);
        }
    }
}

TEST_CASE("landmarks land on their marker pixels under random configs") {
    std::mt19937_64 gen(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const FrameDims dims{48, 40};
    const std::array<Point, kLandmarkCount> centres{
        Point{14.5, 12.5}, Point{33.5, 12.5}, Point{24.5, 20.5},
        Point{16.5, 28.5}, Point{24.5, 30.5}, Point{31.5, 28.5}};
    const std::array<std::array<std::uint8_t, 3>, kLandmarkCount> colours{
        {{255, 0, 0}, {0, 255, 0}, {0, 0, 255}, {255, 255, 0}, {255, 0, 255}, {0, 255, 255}}};
    int checked = 0;
    int rejected = 0;
    for (int trial = 0; trial < 500; ++trial) {
        AugmentConfig cfg;
        cfg.flip_prob = u(gen);
        cfg.hue_frac = 0.1 * u(gen);
        cfg.sat_frac = 0.4 * u(gen);
        cfg.val_frac = 0.4 * u(gen);
        cfg.translate_frac = 0.3 * u(gen);
        cfg.scale_frac = 0.4 * u(gen);
        cfg.fill = 0;
        const AugmentParams params = draw_params(cfg, dims, gen());
        for (std::size_t k = 0; k < kLandmarkCount; ++k) {
            const LandmarkName name = kAllLandmarks[k];
            Image img(dims.w, dims.h, 0);
            const int px = static_cast<int>(centres[k].x);
            const int py = static_cast<int>(centres[k].y);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    img.set(px + dx, py + dy, colours[k][0], colours[k][1], colours[k][2]);
                }
            }
            FaceAnnotation a = annotation(dims, {8, 6, 32, 30});
            a.landmarks.set(name, centres[k]);
            AugmentedSample s;
            try {
                s = apply_augmentation(img, a, params, cfg.fill);
            } catch (const SampleRejected&) {
                ++rejected;
                continue;
            }
            const LandmarkName expected = params.flip ? mirrored(name) : name;
            const auto& q = s.annotation.landmarks[expected];
            if (!q) {
                CHECK_FALSE(in_frame(replay(centres[k], dims, params), dims));
                continue;
            }
            CAPTURE(trial);
            CAPTURE(k);
            REQUIRE(marker_near(s.image, *q));
            ++checked;
        }
    }
    CHECK(checked > 2000);
    CHECK(rejected == 0);
}

TEST_CASE("drawn parameters respect the configured ranges") {
    AugmentConfig cfg;
    cfg.translate_frac = 0.2;
    cfg.scale_frac = 0.25;
    cfg.hue_frac = 0.05;
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        const auto p = draw_params(cfg, {100, 50}, seed);
        REQUIRE(std::abs(p.tx) <= 20.0);
        REQUIRE(std::abs(p.ty) <= 10.0);
        REQUIRE(std::abs(p.scale - 1.0) <= 0.25);
        REQUIRE(std::abs(p.hue_shift) <= 0.05);
        REQUIRE(std::abs(p.sat_gain - 1.0) <= cfg.sat_frac);
        REQUIRE(draw_params(cfg, {100, 50}, seed) == p);
    }
    cfg.flip_prob = 1.0;
    CHECK(draw_params(cfg, {100, 50}, 1).flip);
    cfg.flip_prob = 0.0;
    CHECK_FALSE(draw_params(cfg, {100, 50}, 1).flip);
}

TEST_CASE("a face pushed out of the frame is rejected") {
    FaceAnnotation a = annotation({40, 30}, {0, 0, 10, 10});
    AugmentParams p;
    p.tx = 35;
    CHECK(apply_augmentation(Image(40, 30), a, p).annotation.face == BBox{35, 0, 5, 10});
    p.tx = 40;
    CHECK_THROWS_AS(apply_augmentation(Image(40, 30), a, p), SampleRejected);
}

TEST_CASE("photometric jitter") {
    Image img(4, 1);
    img.set(0, 0, 200, 30, 30);
    img.set(1, 0, 30, 200, 30);
    img.set(2, 0, 0, 0, 0);
    img.set(3, 0, 128, 128, 128);
    Image same = img;
    apply_hsv(same, 0.0, 1.0, 1.0);
    CHECK(same == img);
    Image full_turn = img;
    apply_hsv(full_turn, 1.0, 1.0, 1.0);
    CHECK(full_turn == img);
    Image grey = img;
    apply_hsv(grey, 0.0, 0.0, 1.0);
    CHECK(grey.pixel(0, 0)[0] == grey.pixel(0, 0)[1]);
    CHECK(grey.pixel(2, 0)[0] == 0);
    Image dark = img;
    apply_hsv(dark, 0.0, 1.0, 0.5);
    CHECK(dark.pixel(3, 0)[0] == 64);
}

TEST_CASE("config parsing") {
    const auto cfg = augment_config_from_json(json::parse(R"({"flip_prob": 0.25, "seed": 9})"));
    CHECK(cfg.flip_prob == 0.25);
    CHECK(cfg.seed == 9);
    CHECK(augment_config_from_json(to_json(cfg)).flip_prob == 0.25);
    CHECK_THROWS_AS(augment_config_from_json(json::parse(R"({"flip_prob": 2})")), ConfigError);
    CHECK_THROWS_AS(augment_config_from_json(json::parse(R"({"scale_frac": 1.0})")), ConfigError);
    CHECK_THROWS_AS(augment_config_from_json(json::parse(R"({"fill": 300})")), ConfigError);
    AugmentParams p{true, 0.01, 1.1, 0.9, 2.5, -3.0, 1.05};
    CHECK(augment_params_from_json(to_json(p)) == p);
}

TEST_CASE("identity export copies pixels and annotations") {
    testing::TempDir tmp;
    const auto src = testing::fixture_dir() / "metric";
    const Dataset d = load_annotations(src / "annotations.json");
    export_augmented(d, src, AugmentConfig::identity(), 1, tmp.path());
    const Dataset out = load_annotations(tmp / "epoch_0/annotations.json");
    REQUIRE(out.size() == d.size());
    for (const auto& a : d.annotations()) {
        FaceAnnotation got = out.at(a.image_id);
        CHECK(read_image(tmp / "epoch_0" / got.image_path) == read_image(src / a.image_path));
        got.image_path = a.image_path;
        CHECK(got == a);
    }
}

TEST_CASE("export is deterministic and replayable") {
    testing::TempDir one, two;
    const auto src = testing::fixture_dir() / "metric";
    const Dataset d = load_annotations(src / "annotations.json");
    AugmentConfig cfg;
    cfg.seed = 31;
    const json manifest = export_augmented(d, src, cfg, 2, one.path());
    export_augmented(d, src, cfg, 2, two.path());
    CHECK(testing::read_file(one / "manifest.json") == testing::read_file(two / "manifest.json"));
    CHECK(testing::read_file(one / "epoch_1/annotations.json") ==
          testing::read_file(two / "epoch_1/annotations.json"));
    CHECK(read_image(one / "epoch_1/images/img4.png") == read_image(two / "epoch_1/images/img4.png"));

    cfg.seed = 32;
    testing::TempDir three;
    export_augmented(d, src, cfg, 1, three.path());
    CHECK(testing::read_file(one / "epoch_0/annotations.json") !=
          testing::read_file(three / "epoch_0/annotations.json"));

    // Replay the recorded parameters against the source annotations.
    REQUIRE(manifest["entries"].size() == 24);
    for (const json& e : manifest["entries"]) {
        const std::string id = e["image_id"];
        const int epoch = e["epoch"];
        const AugmentParams p = augment_params_from_json(e["applied"]);
        const FaceAnnotation& before = d.at(id);
        const Dataset after_set =
            load_annotations(one / ("epoch_" + std::to_string(epoch)) / "annotations.json");
        const FaceAnnotation& after = after_set.at(id);
        std::size_t expected_count = 0;
        for (LandmarkName n : kAllLandmarks) {
            const auto& p0 = before.landmarks[n];
            if (!p0) continue;
            const Point q = replay(*p0, before.dims, p);
            if (!in_frame(q, before.dims)) continue;
            ++expected_count;
            const auto& got = after.landmarks[p.flip ? mirrored(n) : n];
            REQUIRE(got.has_value());
            CHECK(std::abs(got->x - q.x) < 1e-9);
            CHECK(std::abs(got->y - q.y) < 1e-9);
        }
        CHECK(after.landmarks.size() == expected_count);
        CHECK(e["seed"].get<std::uint64_t>() == sample_seed(31, epoch, id, e["attempt"]));
    }
}
