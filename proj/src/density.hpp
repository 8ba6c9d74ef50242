#pragma once

#include <vector>

#include "error.hpp"

namespace lc {

/// One labelled point per object, in pixel coordinates of the image it
/// belongs to (x = column, y = row).
struct DotAnnotation {
    struct Point {
        float x, y;
    };
    std::vector<Point> points;
};

/// Per-pixel object density. The sum over the whole map is the (fractional)
/// object count: an interior dot contributes exactly 1, a dot near the border
/// loses the part of its kernel that falls outside the image.
struct DensityMap {
    int h = 0, w = 0;
    std::vector<float> values;  // row-major, h*w

    float at(int y, int x) const { return values[std::size_t(y) * w + x]; }
    float& at(int y, int x) { return values[std::size_t(y) * w + x]; }
};

/// Square 2-d Gaussian, side 2*ceil(3*sigma)+1, sampled at integer offsets
/// from the center and normalized to sum exactly 1.
struct GaussianKernel {
    int radius = 0;  // side = 2*radius + 1
    std::vector<float> values;

    int side() const { return 2 * radius + 1; }
    float at(int dy, int dx) const {
        return values[std::size_t(dy + radius) * side() + (dx + radius)];
    }
};

GaussianKernel gaussian_kernel(float sigma);

/// Place one unit-mass kernel at each dot's nearest pixel; parts of a kernel
/// falling outside the image are clipped, so boundary dots contribute less
/// than 1. An empty dot list yields an all-zero map.
DensityMap render_density(const DotAnnotation& dots, int h, int w, float sigma);

/// Sum of the density over the r x r rectangle with top-left (row0, col0).
/// The rectangle must lie fully inside the map.
double local_count(const DensityMap& density, int row0, int col0, int r);

/// Sum of the whole map.
double total_count(const DensityMap& density);

}  // namespace lc
