#pragma once

// Exact 2-D geometry for axis-aligned face boxes and landmarks.
//
// Coordinates are continuous pixels: origin at the top-left corner, x to the
// right, y downward, a frame of width W and height H spans [0,W]x[0,H]. Pixel
// (i, j) covers [i, i+1) x [j, j+1). All routines are templated on the scalar
// so the same code runs on doubles and on exact rationals.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>

#include "neoface/error.hpp"

namespace neoface {

template <typename T>
struct BasicPoint {
    T x{};
    T y{};

    friend bool operator==(const BasicPoint&, const BasicPoint&) = default;
};

/// Top-left corner plus size.
template <typename T>
struct BasicBBox {
    T x{};
    T y{};
    T w{};
    T h{};

    T right() const { return x + w; }
    T bottom() const { return y + h; }
    T area() const { return w * h; }

    bool contains(const BasicPoint<T>& p) const {
        return p.x >= x && p.x <= right() && p.y >= y && p.y <= bottom();
    }

    static BasicBBox from_corners(const BasicPoint<T>& a, const BasicPoint<T>& b) {
        using std::max;
        using std::min;
        const T x0 = min(a.x, b.x);
        const T y0 = min(a.y, b.y);
        return {x0, y0, max(a.x, b.x) - x0, max(a.y, b.y) - y0};
    }

    friend bool operator==(const BasicBBox&, const BasicBBox&) = default;
};

using Point = BasicPoint<double>;
using BBox = BasicBBox<double>;

/// Clockwise quarter turn applied to an image before detection.
enum class Orientation : std::uint8_t { R0 = 0, R90 = 1, R180 = 2, R270 = 3 };

inline constexpr std::array<Orientation, 4> kAllOrientations{
    Orientation::R0, Orientation::R90, Orientation::R180, Orientation::R270};

constexpr int quarter_turns(Orientation o) noexcept { return static_cast<int>(o); }

constexpr Orientation orientation_from_turns(int turns) noexcept {
    return static_cast<Orientation>(((turns % 4) + 4) % 4);
}

/// Rotate by `a` then by `b`.
constexpr Orientation compose(Orientation a, Orientation b) noexcept {
    return orientation_from_turns(quarter_turns(a) + quarter_turns(b));
}

constexpr Orientation inverse(Orientation o) noexcept {
    return orientation_from_turns(-quarter_turns(o));
}

constexpr std::string_view to_string(Orientation o) noexcept {
    switch (o) {
        case Orientation::R0: return "R0";
        case Orientation::R90: return "R90";
        case Orientation::R180: return "R180";
        case Orientation::R270: return "R270";
    }
    return "R0";
}

inline std::optional<Orientation> parse_orientation(std::string_view s) noexcept {
    for (Orientation o : kAllOrientations) {
        if (to_string(o) == s) return o;
    }
    return std::nullopt;
}

struct FrameDims {
    int w = 0;
    int h = 0;

    friend bool operator==(const FrameDims&, const FrameDims&) = default;
};

namespace detail {

template <typename T>
bool is_finite(const T& v) {
    if constexpr (std::is_floating_point_v<T>) {
        return std::isfinite(v);
    } else {
        return true;
    }
}

// Slack for box containment on floating types: x + w may round one ulp past
// the frame edge after a rotation even when the exact value is on it.
template <typename T>
T containment_slack(const FrameDims& dims) {
    if constexpr (std::is_floating_point_v<T>) {
        return static_cast<T>(1e-9) * static_cast<T>(std::max(dims.w, dims.h));
    } else {
        return T(0);
    }
}

template <typename T>
std::string describe(const BasicPoint<T>& p) {
    std::ostringstream os;
    os << '(' << p.x << ", " << p.y << ')';
    return os.str();
}

template <typename T>
std::string describe(const BasicBBox<T>& b) {
    std::ostringstream os;
    os << '(' << b.x << ", " << b.y << ", " << b.w << ", " << b.h << ')';
    return os.str();
}

inline std::string describe(const FrameDims& d) {
    return std::to_string(d.w) + "x" + std::to_string(d.h);
}

}  // namespace detail

inline bool valid(const FrameDims& d) noexcept { return d.w > 0 && d.h > 0; }

template <typename T>
bool valid(const BasicPoint<T>& p) {
    return detail::is_finite(p.x) && detail::is_finite(p.y);
}

template <typename T>
bool valid(const BasicBBox<T>& b) {
    return detail::is_finite(b.x) && detail::is_finite(b.y) && detail::is_finite(b.w) &&
           detail::is_finite(b.h) && b.w > T(0) && b.h > T(0);
}

template <typename T>
bool in_frame(const BasicPoint<T>& p, const FrameDims& d) {
    return valid(p) && p.x >= T(0) && p.y >= T(0) && p.x <= T(d.w) && p.y <= T(d.h);
}

template <typename T>
bool in_frame(const BasicBBox<T>& b, const FrameDims& d) {
    const T slack = detail::containment_slack<T>(d);
    return valid(b) && b.x >= T(0) && b.y >= T(0) && b.right() <= T(d.w) + slack &&
           b.bottom() <= T(d.h) + slack;
}

/// Intersection area over union area; 0 for disjoint boxes.
template <typename T>
T iou(const BasicBBox<T>& a, const BasicBBox<T>& b) {
    using std::max;
    using std::min;
    const T iw = min(a.right(), b.right()) - max(a.x, b.x);
    const T ih = min(a.bottom(), b.bottom()) - max(a.y, b.y);
    if (iw <= T(0) || ih <= T(0)) return T(0);
    const T inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

/// Swaps width and height for quarter and three-quarter turns.
constexpr FrameDims rotated_dims(FrameDims dims, Orientation o) noexcept {
    if (o == Orientation::R90 || o == Orientation::R270) return {dims.h, dims.w};
    return dims;
}

/// Map a point of an image of size `dims` into the same image rotated
/// clockwise by `o`.
template <typename T>
BasicPoint<T> rotate_point(const BasicPoint<T>& p, FrameDims dims, Orientation o) {
    if (!in_frame(p, dims)) {
        throw GeometryError("rotate_point: " + detail::describe(p) + " outside frame " +
                            detail::describe(dims));
    }
    const T W(dims.w);
    const T H(dims.h);
    switch (o) {
        case Orientation::R0: return p;
        case Orientation::R90: return {H - p.y, p.x};
        case Orientation::R180: return {W - p.x, H - p.y};
        case Orientation::R270: return {p.y, W - p.x};
    }
    return p;
}

/// Inverse of rotate_point: `p` lives in the rotated frame, `original` is the
/// size of the image before rotation.
template <typename T>
BasicPoint<T> unrotate_point(const BasicPoint<T>& p, FrameDims original, Orientation o) {
    const FrameDims rotated = rotated_dims(original, o);
    if (!in_frame(p, rotated)) {
        throw GeometryError("unrotate_point: " + detail::describe(p) + " outside frame " +
                            detail::describe(rotated));
    }
    const T W(original.w);
    const T H(original.h);
    switch (o) {
        case Orientation::R0: return p;
        case Orientation::R90: return {p.y, H - p.x};
        case Orientation::R180: return {W - p.x, H - p.y};
        case Orientation::R270: return {W - p.y, p.x};
    }
    return p;
}

// Box rotation maps the two opposite corners and re-normalizes; written out
// per orientation so width and height are swapped exactly rather than
// recomputed as corner differences.

template <typename T>
BasicBBox<T> rotate_bbox(const BasicBBox<T>& b, FrameDims dims, Orientation o) {
    if (!in_frame(b, dims)) {
        throw GeometryError("rotate_bbox: " + detail::describe(b) + " outside frame " +
                            detail::describe(dims));
    }
    const T W(dims.w);
    const T H(dims.h);
    switch (o) {
        case Orientation::R0: return b;
        case Orientation::R90: return {H - b.y - b.h, b.x, b.h, b.w};
        case Orientation::R180: return {W - b.x - b.w, H - b.y - b.h, b.w, b.h};
        case Orientation::R270: return {b.y, W - b.x - b.w, b.h, b.w};
    }
    return b;
}

template <typename T>
BasicBBox<T> unrotate_bbox(const BasicBBox<T>& b, FrameDims original, Orientation o) {
    const FrameDims rotated = rotated_dims(original, o);
    if (!in_frame(b, rotated)) {
        throw GeometryError("unrotate_bbox: " + detail::describe(b) + " outside frame " +
                            detail::describe(rotated));
    }
    const T W(original.w);
    const T H(original.h);
    switch (o) {
        case Orientation::R0: return b;
        case Orientation::R90: return {b.y, H - b.x - b.w, b.h, b.w};
        case Orientation::R180: return {W - b.x - b.w, H - b.y - b.h, b.w, b.h};
        case Orientation::R270: return {W - b.y - b.h, b.x, b.h, b.w};
    }
    return b;
}

/// Mirror about the vertical axis x = W/2.
template <typename T>
BasicPoint<T> flip_point_h(const BasicPoint<T>& p, FrameDims dims) {
    return {T(dims.w) - p.x, p.y};
}

template <typename T>
BasicBBox<T> flip_bbox_h(const BasicBBox<T>& b, FrameDims dims) {
    return {T(dims.w) - b.x - b.w, b.y, b.w, b.h};
}

/// Clip a box to the frame. Returns nullopt if nothing of positive area remains.
inline std::optional<BBox> clip_to_frame(const BBox& b, FrameDims dims) {
    const double x0 = std::clamp(b.x, 0.0, static_cast<double>(dims.w));
    const double y0 = std::clamp(b.y, 0.0, static_cast<double>(dims.h));
    const double x1 = std::clamp(b.right(), 0.0, static_cast<double>(dims.w));
    const double y1 = std::clamp(b.bottom(), 0.0, static_cast<double>(dims.h));
    if (!(x1 > x0) || !(y1 > y0)) return std::nullopt;
    return BBox{x0, y0, x1 - x0, y1 - y0};
}

inline Point clamp_to_frame(const Point& p, FrameDims dims) {
    return {std::clamp(p.x, 0.0, static_cast<double>(dims.w)),
            std::clamp(p.y, 0.0, static_cast<double>(dims.h))};
}

}  // namespace neoface
