#pragma once

#include <string>
#include <vector>

#include "error.hpp"

namespace lc {

/// Interleaved RGB raster, values stored as float in [0, 255].
struct Image {
    int h = 0, w = 0;
    std::vector<float> pixels;  // h*w*3, row-major, channel-interleaved

    Image() = default;
    Image(int h_, int w_) : h(h_), w(w_), pixels(std::size_t(h_) * w_ * 3, 0.0f) {}

    float* px(int y, int x) { return pixels.data() + (std::size_t(y) * w + x) * 3; }
    const float* px(int y, int x) const { return pixels.data() + (std::size_t(y) * w + x) * 3; }
};

/// Binary PPM (P6, maxval 255). Values are rounded and clamped on write.
Image read_ppm(const std::string& path);
void write_ppm(const Image& img, const std::string& path);

/// 8-bit grayscale PGM (P5), one byte per value.
void write_pgm(const std::vector<unsigned char>& gray, int h, int w, const std::string& path);

/// Bilinear resize by a positive factor; output dims are round(dim*factor),
/// at least 1. Sampling uses half-pixel centers, so factor 1 is the identity.
Image resize_bilinear(const Image& img, double factor);

/// Bilinear resize to exact output dimensions (axes may scale differently).
Image resize_bilinear_to(const Image& img, int oh, int ow);

}  // namespace lc
