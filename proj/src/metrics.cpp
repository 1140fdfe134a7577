#include "neoface/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace neoface {

std::string_view to_string(OutcomeKind k) noexcept {
    switch (k) {
        case OutcomeKind::TP: return "TP";
        case OutcomeKind::FP: return "FP";
        case OutcomeKind::Empty: return "EMPTY";
    }
    return "EMPTY";
}

namespace {

void check_threshold(double t) {
    if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("IoU threshold must lie in (0, 1]");
}

void check_nonempty(std::span<const ImageEvalRecord> records) {
    if (records.empty()) throw std::invalid_argument("no evaluation records");
}

constexpr std::array<LandmarkName, 6> kGroupAll{
    LandmarkName::RightEye,   LandmarkName::LeftEye,     LandmarkName::Nose,
    LandmarkName::RightMouth, LandmarkName::CentreMouth, LandmarkName::LeftMouth};
constexpr std::array<LandmarkName, 2> kGroupEyes{LandmarkName::RightEye, LandmarkName::LeftEye};
constexpr std::array<LandmarkName, 1> kGroupNose{LandmarkName::Nose};
constexpr std::array<LandmarkName, 3> kGroupMouth{LandmarkName::RightMouth,
                                                  LandmarkName::CentreMouth,
                                                  LandmarkName::LeftMouth};

double percent(std::size_t part, std::size_t whole) {
    return 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

}  // namespace

OutcomeKind classify(const StrategyOutcome& outcome, const FaceAnnotation& gt,
                     double iou_threshold) {
    check_threshold(iou_threshold);
    if (!outcome.detection) return OutcomeKind::Empty;
    return iou(outcome.detection->bbox, gt.face) >= iou_threshold ? OutcomeKind::TP
                                                                  : OutcomeKind::FP;
}

double norm_error(const Point& est, const Point& ref, const BBox& ref_bbox) {
    const double dx = ref.x - est.x;
    const double dy = ref.y - est.y;
    return std::sqrt(dx * dx + dy * dy) / std::sqrt(ref_bbox.w * ref_bbox.h);
}

ImageEvalRecord evaluate_image(const StrategyOutcome& outcome, const FaceAnnotation& gt) {
    if (outcome.image_id != gt.image_id) {
        throw std::invalid_argument("outcome for '" + outcome.image_id +
                                    "' evaluated against annotation '" + gt.image_id + "'");
    }
    ImageEvalRecord r;
    r.image_id = gt.image_id;
    r.elapsed_s = outcome.elapsed_s;
    if (!outcome.detection) return r;
    const Detection& d = *outcome.detection;
    r.iou = iou(d.bbox, gt.face);
    r.landmarks_detected = !d.landmarks.empty();
    for (LandmarkName n : kAllLandmarks) {
        const auto& est = d.landmarks[n];
        const auto& ref = gt.landmarks[n];
        if (est && ref) r.norm_error[static_cast<std::size_t>(n)] = norm_error(*est, *ref, gt.face);
    }
    return r;
}

OutcomeKind kind_at(const ImageEvalRecord& r, double iou_threshold) {
    check_threshold(iou_threshold);
    if (!r.iou) return OutcomeKind::Empty;
    return *r.iou >= iou_threshold ? OutcomeKind::TP : OutcomeKind::FP;
}

std::optional<double> ap_at(std::span<const ImageEvalRecord> records, double iou_threshold) {
    check_nonempty(records);
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (const auto& r : records) {
        switch (kind_at(r, iou_threshold)) {
            case OutcomeKind::TP: ++tp; break;
            case OutcomeKind::FP: ++fp; break;
            case OutcomeKind::Empty: break;
        }
    }
    if (tp + fp == 0) return std::nullopt;
    return percent(tp, tp + fp);
}

std::optional<double> map_range(std::span<const ImageEvalRecord> records) {
    double sum = 0.0;
    for (double t : kMapThresholds) {
        auto ap = ap_at(records, t);
        if (!ap) return std::nullopt;
        sum += *ap;
    }
    return sum / static_cast<double>(kMapThresholds.size());
}

std::string_view to_string(LandmarkGroup g) noexcept {
    switch (g) {
        case LandmarkGroup::All: return "all";
        case LandmarkGroup::Eyes: return "eyes";
        case LandmarkGroup::Nose: return "nose";
        case LandmarkGroup::Mouth: return "mouth";
    }
    return "all";
}

std::span<const LandmarkName> members(LandmarkGroup g) noexcept {
    switch (g) {
        case LandmarkGroup::All: return kGroupAll;
        case LandmarkGroup::Eyes: return kGroupEyes;
        case LandmarkGroup::Nose: return kGroupNose;
        case LandmarkGroup::Mouth: return kGroupMouth;
    }
    return kGroupAll;
}

std::optional<MneValue> mne(std::span<const ImageEvalRecord> records, LandmarkGroup group) {
    MneValue out;
    double sum = 0.0;
    for (const auto& r : records) {
        for (LandmarkName n : members(group)) {
            if (const auto& e = r.error_of(n)) {
                sum += *e;
                ++out.n_pairs;
            }
        }
    }
    if (out.n_pairs == 0) return std::nullopt;
    out.value = sum / static_cast<double>(out.n_pairs);
    return out;
}

double empty_rate(std::span<const ImageEvalRecord> records) {
    check_nonempty(records);
    const auto n = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.empty(); });
    return percent(static_cast<std::size_t>(n), records.size());
}

double landmark_empty_rate(std::span<const ImageEvalRecord> records) {
    check_nonempty(records);
    const auto n = std::count_if(records.begin(), records.end(),
                                 [](const auto& r) { return !r.landmarks_detected; });
    return percent(static_cast<std::size_t>(n), records.size());
}

double mean_time_ms(std::span<const ImageEvalRecord> records) {
    check_nonempty(records);
    double sum = 0.0;
    for (const auto& r : records) sum += r.elapsed_s;
    return 1000.0 * sum / static_cast<double>(records.size());
}

EvalReport aggregate_report(std::span<const ImageEvalRecord> records, std::string method_name,
                            std::size_t n_errors) {
    check_nonempty(records);
    EvalReport rep;
    rep.method = std::move(method_name);
    rep.n_images = records.size();
    rep.n_errors = n_errors;
    rep.ap50 = ap_at(records, 0.5);
    rep.map = map_range(records);
    rep.empty_rate = empty_rate(records);
    rep.landmark_empty_rate = landmark_empty_rate(records);
    rep.mean_time_ms = mean_time_ms(records);
    for (LandmarkGroup g : kAllGroups) rep.mne[static_cast<std::size_t>(g)] = mne(records, g);
    return rep;
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank

namespace {

struct SignedRanks {
    std::vector<long> doubled_ranks;  // 2 * average rank, always integral
    long doubled_positive_sum = 0;
    double tie_correction = 0.0;      // sum of t^3 - t over tie groups
};

SignedRanks rank_differences(const std::vector<double>& diffs) {
    std::vector<std::size_t> order(diffs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return std::abs(diffs[i]) < std::abs(diffs[j]);
    });
    SignedRanks out;
    out.doubled_ranks.resize(diffs.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) ++j;
        // positions i..j share ranks (i+1)..(j+1); doubled average = i + j + 2
        const long doubled = static_cast<long>(i + j + 2);
        const double t = static_cast<double>(j - i + 1);
        out.tie_correction += t * t * t - t;
        for (std::size_t k = i; k <= j; ++k) out.doubled_ranks[order[k]] = doubled;
        i = j + 1;
    }
    for (std::size_t k = 0; k < diffs.size(); ++k) {
        if (diffs[k] > 0) out.doubled_positive_sum += out.doubled_ranks[k];
    }
    return out;
}

// Null distribution of the doubled positive-rank sum: each rank joins the
// positive side independently with probability 1/2.
double exact_tail(const SignedRanks& ranks, Alternative alt) {
    const long total = std::accumulate(ranks.doubled_ranks.begin(), ranks.doubled_ranks.end(), 0L);
    std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
    counts[0] = 1.0;
    long reach = 0;
    for (long r : ranks.doubled_ranks) {
        reach += r;
        for (long s = reach; s >= r; --s) counts[static_cast<std::size_t>(s)] += counts[static_cast<std::size_t>(s - r)];
    }
    double tail = 0.0;
    const long w = ranks.doubled_positive_sum;
    for (long s = 0; s <= total; ++s) {
        const bool in_tail = alt == Alternative::Greater ? s >= w : s <= w;
        if (in_tail) tail += counts[static_cast<std::size_t>(s)];
    }
    return std::ldexp(tail, -static_cast<int>(ranks.doubled_ranks.size()));
}

double normal_tail(const SignedRanks& ranks, Alternative alt) {
    const double n = static_cast<double>(ranks.doubled_ranks.size());
    const double w = static_cast<double>(ranks.doubled_positive_sum) / 2.0;
    const double mean = n * (n + 1.0) / 4.0;
    const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ranks.tie_correction / 48.0;
    const double sd = std::sqrt(var);
    double p;
    if (alt == Alternative::Greater) {
        p = 0.5 * std::erfc((w - mean - 0.5) / sd / std::sqrt(2.0));
    } else {
        p = 0.5 * std::erfc(-(w - mean + 0.5) / sd / std::sqrt(2.0));
    }
    return std::clamp(p, std::numeric_limits<double>::min(), 1.0);
}

}  // namespace

SignificanceResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                        Alternative alternative) {
    if (a.size() != b.size()) throw std::invalid_argument("paired samples differ in length");
    if (a.empty()) throw std::invalid_argument("paired samples are empty");
    std::vector<double> diffs;
    diffs.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) diffs.push_back(d);
    }
    if (diffs.empty()) throw NoInformationError("all paired differences are zero");

    const SignedRanks ranks = rank_differences(diffs);
    SignificanceResult res;
    res.n_effective = diffs.size();
    res.statistic = static_cast<double>(ranks.doubled_positive_sum) / 2.0;
    res.exact = diffs.size() <= kWilcoxonExactLimit;
    res.p_value = res.exact ? exact_tail(ranks, alternative) : normal_tail(ranks, alternative);
    const double n = static_cast<double>(diffs.size());
    const double mean = n * (n + 1.0) / 4.0;
    res.a_better = alternative == Alternative::Greater ? res.statistic > mean : res.statistic < mean;
    return res;
}

}  // namespace neoface
