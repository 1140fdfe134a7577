#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "neoface/geometry.hpp"

namespace neoface {

/// 8-bit interleaved RGB buffer, row-major, top row first.
class Image {
public:
    Image() = default;
    Image(int width, int height, std::uint8_t fill = 0);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    FrameDims dims() const noexcept { return {width_, height_}; }
    bool empty() const noexcept { return data_.empty(); }

    std::uint8_t* pixel(int x, int y) { return &data_[offset(x, y)]; }
    const std::uint8_t* pixel(int x, int y) const { return &data_[offset(x, y)]; }

    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        std::uint8_t* p = pixel(x, y);
        p[0] = r;
        p[1] = g;
        p[2] = b;
    }

    std::span<std::uint8_t> bytes() noexcept { return data_; }
    std::span<const std::uint8_t> bytes() const noexcept { return data_; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t offset(int x, int y) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(x)) * 3;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Reads any format the codec supports and converts to 8-bit RGB.
/// Throws Error if the file cannot be decoded.
Image read_image(const std::filesystem::path& path);

/// Writes a lossless PNG.
void write_image(const Image& image, const std::filesystem::path& path);

/// Pixel-exact quarter-turn rotation, consistent with rotate_point on pixel
/// centres.
Image rotate_image(const Image& image, Orientation o);

}  // namespace neoface
