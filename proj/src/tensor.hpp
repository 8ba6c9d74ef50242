#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "error.hpp"

namespace lc {

/// Dense 4-d array in (batch, channels, rows, cols) order, row-major, float32.
/// Activations, weights and gradients all live in this container; weights use
/// the convention (out_channels, in_channels, kh, kw) and fully-connected
/// weights (out_features, in_features, 1, 1).
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_) { resize(n_, c_, h_, w_); }

    void resize(int n_, int c_, int h_, int w_) {
        if (n_ < 1 || c_ < 1 || h_ < 1 || w_ < 1)
            raise_usage("tensor dimensions must be >= 1, got (" + std::to_string(n_) + "," +
                        std::to_string(c_) + "," + std::to_string(h_) + "," + std::to_string(w_) + ")");
        n = n_;
        c = c_;
        h = h_;
        w = w_;
        data.assign(size(), 0.0f);
    }

    std::size_t size() const { return std::size_t(n) * c * h * w; }
    bool empty() const { return data.empty(); }

    std::size_t index(int in, int ic, int iy, int ix) const {
        return ((std::size_t(in) * c + ic) * h + iy) * w + ix;
    }
    float& at(int in, int ic, int iy, int ix) { return data[index(in, ic, iy, ix)]; }
    float at(int in, int ic, int iy, int ix) const { return data[index(in, ic, iy, ix)]; }

    float* plane(int in, int ic) { return data.data() + index(in, ic, 0, 0); }
    const float* plane(int in, int ic) const { return data.data() + index(in, ic, 0, 0); }

    bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }

    std::string shape_str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
               std::to_string(w) + ")";
    }

    void fill(float v) { std::fill(data.begin(), data.end(), v); }
};

}  // namespace lc
