#include "layers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <mutex>

#include "gemm.hpp"

namespace lc {

namespace {

// Big im2col buffers are recycled across calls; page-faulting a fresh 100+ MB
// allocation per layer call would dominate the runtime of small networks.
float* workspace(int slot, std::size_t floats) {
    static std::array<std::vector<float>, 2> pools;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    if (pools[slot].size() < floats) pools[slot].resize(floats);
    return pools[slot].data();
}

// col is (K = c*9) x (P = n*h*w); row k = (ic, ky, kx), column p = (n, y, x).
void im2col_3x3(const Tensor& in, float* col) {
    const int K = in.c * 9;
    const std::size_t P = std::size_t(in.n) * in.h * in.w;
    const int h = in.h, w = in.w;
#pragma omp parallel for schedule(static)
    for (int k = 0; k < K; ++k) {
        const int ic = k / 9, ky = (k % 9) / 3, kx = k % 3;
        const int dx = kx - 1;
        float* row = col + std::size_t(k) * P;
        for (int n = 0; n < in.n; ++n) {
            const float* plane = in.plane(n, ic);
            for (int y = 0; y < h; ++y) {
                float* dst = row + (std::size_t(n) * h + y) * w;
                const int sy = y + ky - 1;
                if (sy < 0 || sy >= h) {
                    std::memset(dst, 0, sizeof(float) * w);
                    continue;
                }
                const float* src = plane + std::size_t(sy) * w;
                const int x0 = std::max(0, -dx);
                const int x1 = w - std::max(0, dx);
                if (x0 > 0) dst[0] = 0.0f;
                if (x1 < w) dst[w - 1] = 0.0f;
                if (x1 > x0) std::memcpy(dst + x0, src + x0 + dx, sizeof(float) * (x1 - x0));
            }
        }
    }
}

void check_kind(const LayerParams& p, LayerKind expected, const char* op) {
    if (p.kind != expected)
        raise_usage(std::string(op) + ": layer kind is " + layer_kind_name(p.kind) + ", expected " +
                    layer_kind_name(expected));
}

}  // namespace

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::conv3x3: return "conv3x3";
        case LayerKind::maxpool2x2: return "maxpool2x2";
        case LayerKind::fullyconnected: return "fullyconnected";
        case LayerKind::relu: return "relu";
        case LayerKind::batchnorm: return "batchnorm";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// conv3x3
// ---------------------------------------------------------------------------

Tensor conv3x3_forward(const Tensor& input, const LayerParams& params) {
    check_kind(params, LayerKind::conv3x3, "conv3x3_forward");
    const Tensor& W = params.weights;
    if (W.h != 3 || W.w != 3)
        raise_usage("conv3x3_forward: kernel is " + std::to_string(W.h) + "x" + std::to_string(W.w) +
                    ", expected 3x3");
    if (W.c != input.c)
        raise_usage("conv3x3_forward: input has " + std::to_string(input.c) +
                    " channels, weights expect " + std::to_string(W.c));
    if (params.bias.size() != std::size_t(W.n))
        raise_usage("conv3x3_forward: bias length " + std::to_string(params.bias.size()) +
                    " != out channels " + std::to_string(W.n));

    const int oc = W.n, K = input.c * 9;
    const std::size_t hw = std::size_t(input.h) * input.w;
    const std::size_t P = std::size_t(input.n) * hw;

    float* col = workspace(0, std::size_t(K) * P);
    im2col_3x3(input, col);

    Tensor out(input.n, oc, input.h, input.w);
    detail::gemm_nn(oc, K, W.data.data(), std::size_t(K), col, P,
                    detail::SegMat{out.data.data(), std::size_t(input.n), hw, std::size_t(oc) * hw, hw},
                    false);

    const long long planes = (long long)input.n * oc;
#pragma omp parallel for schedule(static)
    for (long long pi = 0; pi < planes; ++pi) {
        const float b = params.bias[pi % oc];
        float* p = out.data.data() + std::size_t(pi) * hw;
        for (std::size_t i = 0; i < hw; ++i) p[i] += b;
    }
    return out;
}

ConvGrads conv3x3_backward(const Tensor& input, const LayerParams& params, const Tensor& grad_out) {
    check_kind(params, LayerKind::conv3x3, "conv3x3_backward");
    const Tensor& W = params.weights;
    const int oc = W.n, ic = W.c;
    if (grad_out.n != input.n || grad_out.c != oc || grad_out.h != input.h || grad_out.w != input.w)
        raise_usage("conv3x3_backward: grad_out shape " + grad_out.shape_str() + " does not match (" +
                    std::to_string(input.n) + "," + std::to_string(oc) + "," + std::to_string(input.h) +
                    "," + std::to_string(input.w) + ")");

    const std::size_t hw = std::size_t(input.h) * input.w;
    const std::size_t P = std::size_t(input.n) * hw;

    ConvGrads g;
    g.grad_bias.assign(oc, 0.0f);
#pragma omp parallel for schedule(static)
    for (int o = 0; o < oc; ++o) {
        double s = 0.0;
        for (int n = 0; n < grad_out.n; ++n) {
            const float* p = grad_out.plane(n, o);
            double ps = 0.0;
            for (std::size_t i = 0; i < hw; ++i) ps += p[i];
            s += ps;
        }
        g.grad_bias[o] = float(s);
    }

    // grad wrt input: correlation of grad_out with the kernel flipped in both
    // spatial directions and with in/out channel roles swapped.
    std::vector<float> wrot(std::size_t(ic) * oc * 9);
    for (int i = 0; i < ic; ++i)
        for (int o = 0; o < oc; ++o)
            for (int ky = 0; ky < 3; ++ky)
                for (int kx = 0; kx < 3; ++kx)
                    wrot[((std::size_t(i) * oc + o) * 3 + ky) * 3 + kx] =
                        W.at(o, i, 2 - ky, 2 - kx);

    float* colg = workspace(1, std::size_t(oc) * 9 * P);
    im2col_3x3(grad_out, colg);
    g.grad_input.resize(input.n, ic, input.h, input.w);
    detail::gemm_nn(ic, oc * 9, wrot.data(), std::size_t(oc) * 9, colg, P,
                    detail::SegMat{g.grad_input.data.data(), std::size_t(input.n), hw,
                                   std::size_t(ic) * hw, hw},
                    false);

    // grad wrt weights: per-cell dot of grad_out channels against im2col rows.
    float* col = workspace(1, std::size_t(ic) * 9 * P);
    im2col_3x3(input, col);
    g.grad_weights.resize(oc, ic, 3, 3);
    detail::gemm_abt_acc(oc, ic * 9,
                         detail::ConstSegMat{grad_out.data.data(), std::size_t(input.n), hw,
                                             std::size_t(oc) * hw, hw},
                         col, P, g.grad_weights.data.data(), std::size_t(ic) * 9);
    return g;
}

// ---------------------------------------------------------------------------
// maxpool2x2
// ---------------------------------------------------------------------------

PoolResult maxpool2x2_forward(const Tensor& input) {
    if (input.h % 2 != 0 || input.w % 2 != 0)
        raise_usage("maxpool2x2_forward: spatial dimensions must be even, got " + input.shape_str());
    PoolResult r;
    r.output.resize(input.n, input.c, input.h / 2, input.w / 2);
    r.indices.n = input.n;
    r.indices.c = input.c;
    r.indices.h = input.h / 2;
    r.indices.w = input.w / 2;
    r.indices.pos.assign(r.output.size(), 0);

    const int oh = r.output.h, ow = r.output.w;
    const long long planes = (long long)input.n * input.c;
#pragma omp parallel for schedule(static)
    for (long long pi = 0; pi < planes; ++pi) {
        const float* src = input.data.data() + std::size_t(pi) * input.h * input.w;
        float* dst = r.output.data.data() + std::size_t(pi) * oh * ow;
        std::uint8_t* pos = r.indices.pos.data() + std::size_t(pi) * oh * ow;
        for (int y = 0; y < oh; ++y) {
            const float* r0 = src + std::size_t(2 * y) * input.w;
            const float* r1 = r0 + input.w;
            for (int x = 0; x < ow; ++x) {
                const float v[4] = {r0[2 * x], r0[2 * x + 1], r1[2 * x], r1[2 * x + 1]};
                int best = 0;
                for (int i = 1; i < 4; ++i)
                    if (v[i] > v[best]) best = i;  // strict: first max wins on ties
                dst[y * ow + x] = v[best];
                pos[y * ow + x] = std::uint8_t(best);
            }
        }
    }
    return r;
}

Tensor maxpool2x2_backward(const PoolIndices& indices, const Tensor& grad_out) {
    if (grad_out.n != indices.n || grad_out.c != indices.c || grad_out.h != indices.h ||
        grad_out.w != indices.w)
        raise_usage("maxpool2x2_backward: grad_out shape " + grad_out.shape_str() +
                    " does not match recorded output shape (" + std::to_string(indices.n) + "," +
                    std::to_string(indices.c) + "," + std::to_string(indices.h) + "," +
                    std::to_string(indices.w) + ")");
    if (indices.pos.size() != grad_out.size())
        raise_usage("maxpool2x2_backward: index buffer length mismatch");
    for (std::size_t i = 0; i < indices.pos.size(); ++i)
        if (indices.pos[i] > 3)
            raise_usage("maxpool2x2_backward: argmax index " + std::to_string(int(indices.pos[i])) +
                        " at element " + std::to_string(i) + " out of bounds");

    Tensor grad_in(indices.n, indices.c, indices.h * 2, indices.w * 2);
    const int oh = indices.h, ow = indices.w, iw = grad_in.w;
    const long long planes = (long long)indices.n * indices.c;
#pragma omp parallel for schedule(static)
    for (long long pi = 0; pi < planes; ++pi) {
        const float* go = grad_out.data.data() + std::size_t(pi) * oh * ow;
        const std::uint8_t* pos = indices.pos.data() + std::size_t(pi) * oh * ow;
        float* gi = grad_in.data.data() + std::size_t(pi) * grad_in.h * iw;
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                const std::uint8_t p = pos[y * ow + x];
                const int yy = 2 * y + p / 2, xx = 2 * x + p % 2;
                gi[yy * iw + xx] = go[y * ow + x];
            }
    }
    return grad_in;
}

// ---------------------------------------------------------------------------
// fully connected
// ---------------------------------------------------------------------------

Tensor fullyconnected_forward(const Tensor& input, const LayerParams& params) {
    check_kind(params, LayerKind::fullyconnected, "fullyconnected_forward");
    const Tensor& W = params.weights;
    const std::size_t in_f = std::size_t(input.c) * input.h * input.w;
    if (std::size_t(W.c) * W.h * W.w != in_f)
        raise_usage("fullyconnected_forward: input flattens to " + std::to_string(in_f) +
                    " features, weights expect " + std::to_string(std::size_t(W.c) * W.h * W.w));
    const int out_f = W.n;
    if (params.bias.size() != std::size_t(out_f))
        raise_usage("fullyconnected_forward: bias length " + std::to_string(params.bias.size()) +
                    " != out features " + std::to_string(out_f));

    Tensor out(input.n, out_f, 1, 1);
#pragma omp parallel for schedule(static)
    for (int n = 0; n < input.n; ++n) {
        const float* x = input.data.data() + std::size_t(n) * in_f;
        float* y = out.data.data() + std::size_t(n) * out_f;
        for (int o = 0; o < out_f; ++o) {
            const float* wr = W.data.data() + std::size_t(o) * in_f;
            float s = 0.0f;
#pragma omp simd reduction(+ : s)
            for (std::size_t i = 0; i < in_f; ++i) s += wr[i] * x[i];
            y[o] = s + params.bias[o];
        }
    }
    return out;
}

FcGrads fullyconnected_backward(const Tensor& input, const LayerParams& params,
                                const Tensor& grad_out) {
    check_kind(params, LayerKind::fullyconnected, "fullyconnected_backward");
    const Tensor& W = params.weights;
    const std::size_t in_f = std::size_t(input.c) * input.h * input.w;
    const int out_f = W.n;
    if (grad_out.n != input.n || grad_out.c != out_f || grad_out.h != 1 || grad_out.w != 1)
        raise_usage("fullyconnected_backward: grad_out shape " + grad_out.shape_str() +
                    " does not match (" + std::to_string(input.n) + "," + std::to_string(out_f) +
                    ",1,1)");

    FcGrads g;
    g.grad_bias.assign(out_f, 0.0f);
#pragma omp parallel for schedule(static)
    for (int o = 0; o < out_f; ++o) {
        double s = 0.0;
        for (int n = 0; n < input.n; ++n) s += grad_out.data[std::size_t(n) * out_f + o];
        g.grad_bias[o] = float(s);
    }

    g.grad_input.resize(input.n, input.c, input.h, input.w);
    detail::gemm_nn(input.n, in_f, out_f, grad_out.data.data(), W.data.data(),
                    g.grad_input.data.data(), false);

    g.grad_weights.resize(out_f, W.c, W.h, W.w);
    constexpr int kOBlock = 8;  // weight rows per owner thread block
    const int nblocks = (out_f + kOBlock - 1) / kOBlock;
#pragma omp parallel for schedule(static)
    for (int blk = 0; blk < nblocks; ++blk) {
        const int o0 = blk * kOBlock;
        const int o1 = std::min(out_f, o0 + kOBlock);
        for (int n = 0; n < input.n; ++n) {
            const float* x = input.data.data() + std::size_t(n) * in_f;
            for (int o = o0; o < o1; ++o) {
                const float s = grad_out.data[std::size_t(n) * out_f + o];
                float* gw = g.grad_weights.data.data() + std::size_t(o) * in_f;
#pragma omp simd
                for (std::size_t i = 0; i < in_f; ++i) gw[i] += s * x[i];
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// relu
// ---------------------------------------------------------------------------

Tensor relu_forward(const Tensor& input) {
    Tensor out = input;
    float* p = out.data.data();
    const std::size_t sz = out.size();
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)sz; ++i) p[i] = p[i] > 0.0f ? p[i] : 0.0f;
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
    if (!input.same_shape(grad_out))
        raise_usage("relu_backward: grad_out shape " + grad_out.shape_str() + " != input shape " +
                    input.shape_str());
    Tensor grad_in(input.n, input.c, input.h, input.w);
    const std::size_t sz = input.size();
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)sz; ++i)
        grad_in.data[i] = input.data[i] > 0.0f ? grad_out.data[i] : 0.0f;
    return grad_in;
}

// ---------------------------------------------------------------------------
// batchnorm
// ---------------------------------------------------------------------------

namespace {

void check_bn(const Tensor& input, const LayerParams& p, const char* op) {
    const std::size_t c = std::size_t(input.c);
    if (p.bn_gamma.size() != c || p.bn_beta.size() != c || p.bn_running_mean.size() != c ||
        p.bn_running_var.size() != c)
        raise_usage(std::string(op) + ": parameter vectors sized for " +
                    std::to_string(p.bn_gamma.size()) + " channels, input has " +
                    std::to_string(input.c));
}

}  // namespace

Tensor batchnorm_forward(const Tensor& input, LayerParams& params, BnMode mode,
                         BnStats* stats_out) {
    check_kind(params, LayerKind::batchnorm, "batchnorm_forward");
    check_bn(input, params, "batchnorm_forward");
    if (mode == BnMode::infer && !params.bn_initialized)
        raise_usage("batchnorm_forward: inference requested but running statistics were never "
                    "initialized (train at least one batch or load a checkpoint)");

    const int C = input.c;
    const std::size_t hw = std::size_t(input.h) * input.w;
    const std::size_t cnt = std::size_t(input.n) * hw;
    Tensor out(input.n, input.c, input.h, input.w);
    BnStats batch;
    batch.mean.assign(C, 0.0f);
    batch.var.assign(C, 0.0f);

#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < C; ++ch) {
        float mean, var;
        if (mode == BnMode::train) {
            double s = 0.0;
            for (int n = 0; n < input.n; ++n) {
                const float* p = input.plane(n, ch);
                double ps = 0.0;
                for (std::size_t i = 0; i < hw; ++i) ps += p[i];
                s += ps;
            }
            mean = float(s / double(cnt));
            double v = 0.0;
            for (int n = 0; n < input.n; ++n) {
                const float* p = input.plane(n, ch);
                double pv = 0.0;
                for (std::size_t i = 0; i < hw; ++i) {
                    const double d = double(p[i]) - mean;
                    pv += d * d;
                }
                v += pv;
            }
            var = float(v / double(cnt));
            batch.mean[ch] = mean;
            batch.var[ch] = var;
        } else {
            mean = params.bn_running_mean[ch];
            var = params.bn_running_var[ch];
        }
        const float inv = 1.0f / std::sqrt(var + kBnEpsilon);
        const float gamma = params.bn_gamma[ch], beta = params.bn_beta[ch];
        for (int n = 0; n < input.n; ++n) {
            const float* p = input.plane(n, ch);
            float* q = out.plane(n, ch);
#pragma omp simd
            for (std::size_t i = 0; i < hw; ++i) q[i] = gamma * (p[i] - mean) * inv + beta;
        }
    }

    if (mode == BnMode::train) {
        for (int ch = 0; ch < C; ++ch) {
            params.bn_running_mean[ch] =
                (1.0f - kBnMomentum) * params.bn_running_mean[ch] + kBnMomentum * batch.mean[ch];
            params.bn_running_var[ch] =
                (1.0f - kBnMomentum) * params.bn_running_var[ch] + kBnMomentum * batch.var[ch];
        }
        params.bn_initialized = true;
        if (stats_out) *stats_out = std::move(batch);
    } else if (stats_out) {
        stats_out->mean = params.bn_running_mean;
        stats_out->var = params.bn_running_var;
    }
    return out;
}

BnGrads batchnorm_backward(const Tensor& input, const LayerParams& params, const BnStats& stats,
                           const Tensor& grad_out) {
    check_kind(params, LayerKind::batchnorm, "batchnorm_backward");
    check_bn(input, params, "batchnorm_backward");
    if (!input.same_shape(grad_out))
        raise_usage("batchnorm_backward: grad_out shape " + grad_out.shape_str() +
                    " != input shape " + input.shape_str());
    if (stats.mean.size() != std::size_t(input.c) || stats.var.size() != std::size_t(input.c))
        raise_usage("batchnorm_backward: batch statistics sized for " +
                    std::to_string(stats.mean.size()) + " channels, input has " +
                    std::to_string(input.c));

    const int C = input.c;
    const std::size_t hw = std::size_t(input.h) * input.w;
    const double cnt = double(std::size_t(input.n) * hw);
    BnGrads g;
    g.grad_input.resize(input.n, input.c, input.h, input.w);
    g.grad_gamma.assign(C, 0.0f);
    g.grad_beta.assign(C, 0.0f);

#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < C; ++ch) {
        const float mean = stats.mean[ch];
        const float inv = 1.0f / std::sqrt(stats.var[ch] + kBnEpsilon);
        double sum_g = 0.0, sum_gx = 0.0;
        for (int n = 0; n < input.n; ++n) {
            const float* x = input.plane(n, ch);
            const float* go = grad_out.plane(n, ch);
            double sg = 0.0, sgx = 0.0;
            for (std::size_t i = 0; i < hw; ++i) {
                sg += go[i];
                sgx += double(go[i]) * (double(x[i]) - mean) * inv;
            }
            sum_g += sg;
            sum_gx += sgx;
        }
        g.grad_beta[ch] = float(sum_g);
        g.grad_gamma[ch] = float(sum_gx);
        const float gamma = params.bn_gamma[ch];
        const float mg = float(sum_g / cnt), mgx = float(sum_gx / cnt);
        for (int n = 0; n < input.n; ++n) {
            const float* x = input.plane(n, ch);
            const float* go = grad_out.plane(n, ch);
            float* gi = g.grad_input.plane(n, ch);
#pragma omp simd
            for (std::size_t i = 0; i < hw; ++i) {
                const float xh = (x[i] - mean) * inv;
                gi[i] = gamma * inv * (go[i] - mg - xh * mgx);
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// initialization
// ---------------------------------------------------------------------------

Tensor he_init(int n, int c, int h, int w, Rng& rng) {
    Tensor t(n, c, h, w);
    const std::size_t fan_in = std::size_t(c) * h * w;
    const double stddev = std::sqrt(2.0 / double(fan_in));
    for (auto& v : t.data) v = float(rng.gaussian(0.0, stddev));
    return t;
}

}  // namespace lc
