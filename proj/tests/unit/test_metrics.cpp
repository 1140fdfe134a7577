#include <doctest.h>

#include <cmath>
#include <random>

#include "neoface/metrics.hpp"

using namespace neoface;

namespace {

ImageEvalRecord record(std::optional<double> iou_value) {
    ImageEvalRecord r;
    r.image_id = "i";
    r.iou = iou_value;
    return r;
}

std::vector<ImageEvalRecord> records(int detections_ok, int detections_bad, int empties,
                                     double ok_iou = 0.8, double bad_iou = 0.3) {
    std::vector<ImageEvalRecord> out;
    for (int i = 0; i < detections_ok; ++i) out.push_back(record(ok_iou));
    for (int i = 0; i < detections_bad; ++i) out.push_back(record(bad_iou));
    for (int i = 0; i < empties; ++i) out.push_back(record(std::nullopt));
    return out;
}

// Reference p-value by listing all 2^n sign assignments over average ranks.
double enumeration_p(const std::vector<double>& a, const std::vector<double>& b, bool greater) {
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] - b[i] != 0.0) d.push_back(a[i] - b[i]);
    }
    const std::size_t n = d.size();
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n; ++i) {
        double less = 0, equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(d[j]) < std::abs(d[i])) ++less;
            if (std::abs(d[j]) == std::abs(d[i])) ++equal;
        }
        rank[i] = less + (equal + 1) / 2;
    }
    double w = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (d[i] > 0) w += rank[i];
    }
    std::uint64_t hits = 0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask >> i & 1) s += rank[i];
        }
        hits += greater ? (s >= w) : (s <= w);
    }
    return static_cast<double>(hits) / static_cast<double>(std::uint64_t{1} << n);
}

}  // namespace

TEST_CASE("classification at a threshold") {
    CHECK(kind_at(record(0.72), 0.70) == OutcomeKind::TP);
    CHECK(kind_at(record(0.72), 0.75) == OutcomeKind::FP);
    CHECK(kind_at(record(0.5), 0.5) == OutcomeKind::TP);
    for (double t : kMapThresholds) CHECK(kind_at(record(std::nullopt), t) == OutcomeKind::Empty);
    CHECK_THROWS_AS(kind_at(record(0.5), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(kind_at(record(0.5), 1.5), std::invalid_argument);

    StrategyOutcome out;
    out.image_id = "a";
    FaceAnnotation gt;
    gt.image_id = "a";
    gt.face = {0, 0, 10, 10};
    CHECK(classify(out, gt, 0.5) == OutcomeKind::Empty);
    out.detection = Detection{{0, 0, 10, 10}, {}, 0.9};
    CHECK(classify(out, gt, 0.95) == OutcomeKind::TP);
    out.detection->bbox = {5, 0, 10, 10};
    CHECK(classify(out, gt, 0.5) == OutcomeKind::FP);
}

TEST_CASE("AP50 excludes empties") {
    const auto r = records(6, 2, 2);
    CHECK(*ap_at(r, 0.5) == 75.0);
    CHECK(empty_rate(r) == 20.0);

    const auto sparse = records(2, 0, 88);
    CHECK(*ap_at(sparse, 0.5) == 100.0);
    CHECK(std::abs(empty_rate(sparse) - 97.8) < 0.05);

    CHECK(*ap_at(records(0, 3, 1), 0.5) == 0.0);
    CHECK_FALSE(ap_at(records(0, 0, 4), 0.5).has_value());
    CHECK_THROWS_AS(ap_at(std::vector<ImageEvalRecord>{}, 0.5), std::invalid_argument);
}

TEST_CASE("mAP spot checks") {
    const std::vector<ImageEvalRecord> one{record(0.72)};
    CHECK(*map_range(one) == 50.0);
    CHECK(*ap_at(one, 0.5) == 100.0);
    CHECK(*map_range(records(4, 0, 0, 1.0)) == 100.0);
    CHECK_FALSE(map_range(records(0, 0, 3)).has_value());
}

TEST_CASE("normalized error") {
    CHECK(norm_error({3, 4}, {3, 4}, {0, 0, 10, 10}) == 0.0);
    CHECK(norm_error({3, 4}, {0, 0}, {0, 0, 100, 100}) == 0.05);
    CHECK(norm_error({3, 4}, {0, 0}, {0, 0, 50, 200}) == 0.05);
}

TEST_CASE("MNE over landmark groups") {
    ImageEvalRecord r = record(0.9);
    r.norm_error[static_cast<std::size_t>(LandmarkName::RightEye)] = 0.05;
    r.norm_error[static_cast<std::size_t>(LandmarkName::Nose)] = 0.15;
    const std::vector<ImageEvalRecord> rs{r};
    CHECK(std::abs(mne(rs, LandmarkGroup::All)->value - 0.10) < 1e-15);
    CHECK(mne(rs, LandmarkGroup::All)->n_pairs == 2);
    CHECK(mne(rs, LandmarkGroup::Eyes)->value == 0.05);
    CHECK(mne(rs, LandmarkGroup::Nose)->value == 0.15);
    CHECK_FALSE(mne(rs, LandmarkGroup::Mouth).has_value());
    CHECK(members(LandmarkGroup::Mouth).size() == 3);
    CHECK(members(LandmarkGroup::All).size() == 6);
}

TEST_CASE("evaluate_image against a perfect detection") {
    FaceAnnotation gt;
    gt.image_id = "a";
    gt.dims = {100, 100};
    gt.face = {10, 10, 50, 50};
    gt.landmarks.set(LandmarkName::Nose, {30, 30});
    gt.landmarks.set(LandmarkName::LeftEye, {40, 20});
    StrategyOutcome out;
    out.image_id = "a";
    out.elapsed_s = 0.002;
    Detection d{gt.face, {}, 0.9};
    d.landmarks.set(LandmarkName::Nose, {30, 30});
    d.landmarks.set(LandmarkName::CentreMouth, {30, 45});
    out.detection = d;
    const ImageEvalRecord r = evaluate_image(out, gt);
    CHECK(*r.iou == 1.0);
    CHECK(r.landmarks_detected);
    CHECK(*r.error_of(LandmarkName::Nose) == 0.0);
    CHECK_FALSE(r.error_of(LandmarkName::LeftEye).has_value());
    CHECK_FALSE(r.error_of(LandmarkName::CentreMouth).has_value());

    const EvalReport rep = aggregate_report(std::vector<ImageEvalRecord>{r}, "m");
    CHECK(*rep.ap50 == 100.0);
    CHECK(*rep.map == 100.0);
    CHECK(rep.empty_rate == 0.0);
    CHECK(rep.mne_of(LandmarkGroup::All)->value == 0.0);
    CHECK(rep.mean_time_ms == 2.0);

    out.image_id = "b";
    CHECK_THROWS_AS(evaluate_image(out, gt), std::invalid_argument);
}

TEST_CASE("all-empty method") {
    const auto r = records(0, 0, 5);
    const EvalReport rep = aggregate_report(r, "none");
    CHECK(rep.empty_rate == 100.0);
    CHECK(rep.landmark_empty_rate == 100.0);
    CHECK_FALSE(rep.ap50.has_value());
    CHECK_FALSE(rep.map.has_value());
    CHECK_FALSE(rep.mne_of(LandmarkGroup::All).has_value());
}

TEST_CASE("wilcoxon extreme case") {
    const std::vector<double> a{1.1, 2.2, 3.3, 4.4, 5.5};
    const std::vector<double> b{1.0, 2.0, 3.0, 4.0, 5.0};
    const auto r = wilcoxon_signed_rank(a, b, Alternative::Greater);
    CHECK(r.p_value == 0.03125);
    CHECK(r.n_effective == 5);
    CHECK(r.statistic == 15.0);
    CHECK(r.exact);
    CHECK(r.a_better);
    CHECK(wilcoxon_signed_rank(a, b, Alternative::Less).p_value == 1.0);
}

TEST_CASE("wilcoxon symmetric differences") {
    const std::vector<double> a{1.5, 0.5, 1.5, 0.5, 2.0, 0.0};
    const std::vector<double> b{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
    CHECK(wilcoxon_signed_rank(a, b, Alternative::Greater).p_value >= 0.5);
    CHECK(wilcoxon_signed_rank(a, b, Alternative::Less).p_value >= 0.5);
}

TEST_CASE("wilcoxon drops zero differences") {
    const std::vector<double> a{1, 2, 3, 4};
    const std::vector<double> b{1, 2, 2, 3};
    const auto r = wilcoxon_signed_rank(a, b, Alternative::Greater);
    CHECK(r.n_effective == 2);
    CHECK(r.p_value == 0.25);
    CHECK_THROWS_AS(wilcoxon_signed_rank(a, a, Alternative::Greater), NoInformationError);
    CHECK_THROWS_AS(wilcoxon_signed_rank(std::vector<double>{1}, std::vector<double>{1, 2},
                                         Alternative::Greater),
                    std::invalid_argument);
}

TEST_CASE("wilcoxon exact p equals full enumeration") {
    std::mt19937_64 gen(41);
    for (std::size_t n = 1; n <= 12; ++n) {
        for (int sample = 0; sample < 100; ++sample) {
            std::vector<double> a(n), b(n);
            // A coarse grid on every other sample produces zeros and ties.
            const bool coarse = sample % 2 == 0;
            std::uniform_real_distribution<double> u(0.0, 1.0);
            std::uniform_int_distribution<int> g(0, 4);
            for (std::size_t i = 0; i < n; ++i) {
                a[i] = coarse ? g(gen) * 0.25 : u(gen);
                b[i] = coarse ? g(gen) * 0.25 : u(gen);
            }
            for (bool greater : {true, false}) {
                bool all_zero = true;
                for (std::size_t i = 0; i < n; ++i) all_zero = all_zero && a[i] == b[i];
                const auto alt = greater ? Alternative::Greater : Alternative::Less;
                if (all_zero) {
                    CHECK_THROWS_AS(wilcoxon_signed_rank(a, b, alt), NoInformationError);
                    continue;
                }
                const auto r = wilcoxon_signed_rank(a, b, alt);
                CAPTURE(n);
                CAPTURE(sample);
                REQUIRE(r.exact);
                REQUIRE(std::abs(r.p_value - enumeration_p(a, b, greater)) <= 1e-12);
            }
        }
    }
}

TEST_CASE("wilcoxon exact up to the limit") {
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u(-1.0, 1.2);
    for (std::size_t n : {16, 20}) {
        std::vector<double> a(n), b(n, 0.0);
        for (auto& v : a) v = u(gen);
        const auto r = wilcoxon_signed_rank(a, b, Alternative::Greater);
        CHECK(r.exact);
        CHECK(std::abs(r.p_value - enumeration_p(a, b, true)) <= 1e-12);
    }
}

TEST_CASE("wilcoxon normal approximation above the limit") {
    std::vector<double> a(25), b(25, 0.0);
    for (int i = 0; i < 25; ++i) a[static_cast<std::size_t>(i)] = i + 1;
    const auto r = wilcoxon_signed_rank(a, b, Alternative::Greater);
    CHECK_FALSE(r.exact);
    CHECK(r.statistic == 325.0);
    const double z = (325.0 - 162.5 - 0.5) / std::sqrt(25.0 * 26.0 * 51.0 / 24.0);
    CHECK(std::abs(r.p_value - 0.5 * std::erfc(z / std::sqrt(2.0))) < 1e-15);

    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(-1.0, 1.3);
    std::vector<double> x(21), y(21, 0.0);
    for (auto& v : x) v = u(gen);
    const double approx = wilcoxon_signed_rank(x, y, Alternative::Greater).p_value;
    CHECK(std::abs(approx - enumeration_p(x, y, true)) < 0.01);
}
