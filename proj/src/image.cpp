#include "image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace lc {

namespace {

// Skips PPM whitespace and '#' comments, then reads one unsigned integer.
int read_pnm_int(std::istream& in, const std::string& path) {
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (!std::isspace(ch)) {
            break;
        }
        ch = in.get();
    }
    if (ch == EOF || !std::isdigit(ch)) raise_data("malformed PPM header in " + path);
    long v = 0;
    while (ch != EOF && std::isdigit(ch)) {
        v = v * 10 + (ch - '0');
        if (v > 1 << 30) raise_data("PPM header value out of range in " + path);
        ch = in.get();
    }
    in.unget();
    return int(v);
}

}  // namespace

Image read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise_data("cannot open image file " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '6') raise_data(path + " is not a binary PPM (P6) image");
    const int w = read_pnm_int(in, path);
    const int h = read_pnm_int(in, path);
    const int maxval = read_pnm_int(in, path);
    if (w < 1 || h < 1) raise_data("invalid PPM dimensions in " + path);
    if (maxval != 255) raise_data(path + ": only maxval 255 PPM images are supported");
    in.get();  // the single whitespace byte after the header

    std::vector<unsigned char> raw(std::size_t(h) * w * 3);
    in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
    if (std::size_t(in.gcount()) != raw.size()) raise_data("truncated PPM data in " + path);

    Image img(h, w);
    for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = float(raw[i]);
    return img;
}

void write_ppm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise_data("cannot write image file " + path);
    out << "P6\n" << img.w << " " << img.h << "\n255\n";
    std::vector<unsigned char> raw(img.pixels.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const float v = std::clamp(img.pixels[i], 0.0f, 255.0f);
        raw[i] = (unsigned char)(std::lround(v));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size()));
    if (!out) raise_data("failed writing image data to " + path);
}

void write_pgm(const std::vector<unsigned char>& gray, int h, int w, const std::string& path) {
    if (gray.size() != std::size_t(h) * w) raise_usage("write_pgm: buffer size does not match dims");
    std::ofstream out(path, std::ios::binary);
    if (!out) raise_data("cannot write image file " + path);
    out << "P5\n" << w << " " << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(gray.data()), std::streamsize(gray.size()));
    if (!out) raise_data("failed writing image data to " + path);
}

Image resize_bilinear(const Image& img, double factor) {
    if (!(factor > 0.0)) raise_usage("resize_bilinear: factor must be > 0");
    const int oh = std::max(1, int(std::lround(img.h * factor)));
    const int ow = std::max(1, int(std::lround(img.w * factor)));
    return resize_bilinear_to(img, oh, ow);
}

Image resize_bilinear_to(const Image& img, int oh, int ow) {
    if (oh < 1 || ow < 1) raise_usage("resize_bilinear_to: output dims must be >= 1");
    if (oh == img.h && ow == img.w) return img;

    Image out(oh, ow);
    const double sy = double(img.h) / oh, sx = double(img.w) / ow;
    for (int y = 0; y < oh; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        const int y0 = std::clamp(int(std::floor(fy)), 0, img.h - 1);
        const int y1 = std::min(y0 + 1, img.h - 1);
        const double wy = std::clamp(fy - y0, 0.0, 1.0);
        for (int x = 0; x < ow; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            const int x0 = std::clamp(int(std::floor(fx)), 0, img.w - 1);
            const int x1 = std::min(x0 + 1, img.w - 1);
            const double wx = std::clamp(fx - x0, 0.0, 1.0);
            const float* p00 = img.px(y0, x0);
            const float* p01 = img.px(y0, x1);
            const float* p10 = img.px(y1, x0);
            const float* p11 = img.px(y1, x1);
            float* q = out.px(y, x);
            for (int ch = 0; ch < 3; ++ch) {
                const double top = p00[ch] + (p01[ch] - p00[ch]) * wx;
                const double bot = p10[ch] + (p11[ch] - p10[ch]) * wx;
                q[ch] = float(top + (bot - top) * wy);
            }
        }
    }
    return out;
}

}  // namespace lc
