#include "neoface/image.hpp"

#include <fstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "neoface/error.hpp"

namespace neoface {

Image::Image(int width, int height, std::uint8_t fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3, fill) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("image size must be positive");
}

Image read_image(const std::filesystem::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw Error("cannot decode image " + path.string());
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    Image out(rgb.cols, rgb.rows);
    for (int y = 0; y < rgb.rows; ++y) {
        const auto* row = rgb.ptr<std::uint8_t>(y);
        std::copy(row, row + rgb.cols * 3, out.pixel(0, y));
    }
    return out;
}

void write_image(const Image& image, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    cv::Mat bgr(image.height(), image.width(), CV_8UC3);
    for (int y = 0; y < image.height(); ++y) {
        const std::uint8_t* src = image.pixel(0, y);
        auto* dst = bgr.ptr<std::uint8_t>(y);
        for (int x = 0; x < image.width(); ++x) {
            dst[3 * x + 0] = src[3 * x + 2];
            dst[3 * x + 1] = src[3 * x + 1];
            dst[3 * x + 2] = src[3 * x + 0];
        }
    }
    std::vector<std::uint8_t> encoded;
    if (!cv::imencode(".png", bgr, encoded)) throw Error("cannot encode image " + path.string());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(encoded.data()),
              static_cast<std::streamsize>(encoded.size()));
    if (!out) throw Error("cannot write image " + path.string());
}

Image rotate_image(const Image& image, Orientation o) {
    if (o == Orientation::R0) return image;
    const int W = image.width();
    const int H = image.height();
    const FrameDims out_dims = rotated_dims(image.dims(), o);
    Image out(out_dims.w, out_dims.h);
    for (int v = 0; v < out_dims.h; ++v) {
        for (int u = 0; u < out_dims.w; ++u) {
            int sx = u;
            int sy = v;
            switch (o) {
                case Orientation::R90: sx = v; sy = H - 1 - u; break;
                case Orientation::R180: sx = W - 1 - u; sy = H - 1 - v; break;
                case Orientation::R270: sx = W - 1 - v; sy = u; break;
                case Orientation::R0: break;
            }
            const std::uint8_t* s = image.pixel(sx, sy);
            out.set(u, v, s[0], s[1], s[2]);
        }
    }
    return out;
}

}  // namespace neoface
