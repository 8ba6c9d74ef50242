#include "density.hpp"

#include <algorithm>
#include <cmath>

namespace lc {

GaussianKernel gaussian_kernel(float sigma) {
    if (!(sigma > 0.0f)) raise_usage("gaussian_kernel: sigma must be > 0");
    GaussianKernel k;
    k.radius = int(std::ceil(3.0 * double(sigma)));
    const int side = k.side();
    k.values.resize(std::size_t(side) * side);
    const double inv2s2 = 1.0 / (2.0 * double(sigma) * double(sigma));
    double sum = 0.0;
    for (int dy = -k.radius; dy <= k.radius; ++dy)
        for (int dx = -k.radius; dx <= k.radius; ++dx) {
            const double v = std::exp(-(double(dx) * dx + double(dy) * dy) * inv2s2);
            k.values[std::size_t(dy + k.radius) * side + (dx + k.radius)] = float(v);
            sum += v;
        }
    const float inv = float(1.0 / sum);
    for (auto& v : k.values) v *= inv;
    return k;
}

DensityMap render_density(const DotAnnotation& dots, int h, int w, float sigma) {
    if (h < 1 || w < 1) raise_usage("render_density: map dimensions must be >= 1");
    DensityMap d;
    d.h = h;
    d.w = w;
    d.values.assign(std::size_t(h) * w, 0.0f);
    if (dots.points.empty()) return d;

    const GaussianKernel k = gaussian_kernel(sigma);
    for (const auto& pt : dots.points) {
        // Nearest pixel; rounding can push an in-bounds coordinate to the
        // upper edge, which is clamped back.
        const int cx = std::clamp(int(std::lround(double(pt.x))), 0, w - 1);
        const int cy = std::clamp(int(std::lround(double(pt.y))), 0, h - 1);
        const int y0 = std::max(0, cy - k.radius), y1 = std::min(h - 1, cy + k.radius);
        const int x0 = std::max(0, cx - k.radius), x1 = std::min(w - 1, cx + k.radius);
        for (int y = y0; y <= y1; ++y) {
            const float* krow = &k.values[std::size_t(y - cy + k.radius) * k.side()];
            float* drow = &d.values[std::size_t(y) * w];
            for (int x = x0; x <= x1; ++x) drow[x] += krow[x - cx + k.radius];
        }
    }
    return d;
}

double local_count(const DensityMap& density, int row0, int col0, int r) {
    if (r < 1) raise_usage("local_count: rectangle side must be >= 1");
    if (row0 < 0 || col0 < 0 || row0 + r > density.h || col0 + r > density.w)
        raise_usage("local_count: rectangle (" + std::to_string(row0) + "," + std::to_string(col0) +
                    ")+" + std::to_string(r) + " exceeds map " + std::to_string(density.h) + "x" +
                    std::to_string(density.w));
    double s = 0.0;
    for (int y = row0; y < row0 + r; ++y) {
        const float* row = &density.values[std::size_t(y) * density.w + col0];
        double rs = 0.0;
        for (int x = 0; x < r; ++x) rs += row[x];
        s += rs;
    }
    return s;
}

double total_count(const DensityMap& density) {
    double s = 0.0;
    for (float v : density.values) s += v;
    return s;
}

}  // namespace lc
