#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace lc {

enum class LayerKind : std::uint8_t {
    conv3x3 = 0,
    maxpool2x2 = 1,
    fullyconnected = 2,
    relu = 3,
    batchnorm = 4,
};

const char* layer_kind_name(LayerKind k);

/// Parameters of one layer. Which fields are populated depends on the kind:
/// conv3x3 uses weights (oc, ic, 3, 3) + bias[oc]; fullyconnected uses
/// weights (out, in, 1, 1) + bias[out]; batchnorm uses the four per-channel
/// vectors; relu/maxpool carry nothing.
struct LayerParams {
    LayerKind kind = LayerKind::relu;
    Tensor weights;
    std::vector<float> bias;
    std::vector<float> bn_gamma, bn_beta;
    std::vector<float> bn_running_mean, bn_running_var;
    bool bn_initialized = false;  // running statistics seen at least one batch
};

// Batch norm constants: the conventional values of the original formulation.
inline constexpr float kBnEpsilon = 1e-5f;
inline constexpr float kBnMomentum = 0.1f;  // new_running = 0.9*old + 0.1*batch

// ---------------------------------------------------------------------------
// Convolution, 3x3 kernel, stride 1, 1-pixel zero padding (spatial size is
// preserved). Computed as cross-correlation, the usual deep-learning
// convention; for the symmetric Gaussian kernels used elsewhere in this
// project the distinction from true convolution is immaterial.
// ---------------------------------------------------------------------------

Tensor conv3x3_forward(const Tensor& input, const LayerParams& params);

struct ConvGrads {
    Tensor grad_input;
    Tensor grad_weights;
    std::vector<float> grad_bias;
};

ConvGrads conv3x3_backward(const Tensor& input, const LayerParams& params, const Tensor& grad_out);

// ---------------------------------------------------------------------------
// Max pooling, 2x2 window, stride 2. Requires even h and w. Ties are broken
// by the first maximum in row-major scan order of the window, so backward
// routing is deterministic.
// ---------------------------------------------------------------------------

struct PoolIndices {
    int n = 0, c = 0, h = 0, w = 0;      // output dimensions
    std::vector<std::uint8_t> pos;       // winner position in its 2x2 block, 0..3 row-major
};

struct PoolResult {
    Tensor output;
    PoolIndices indices;
};

PoolResult maxpool2x2_forward(const Tensor& input);
Tensor maxpool2x2_backward(const PoolIndices& indices, const Tensor& grad_out);

// ---------------------------------------------------------------------------
// Fully connected. Input (n, c, h, w) is flattened per sample in (c, h, w)
// order; output is (n, out_features, 1, 1).
// ---------------------------------------------------------------------------

Tensor fullyconnected_forward(const Tensor& input, const LayerParams& params);

struct FcGrads {
    Tensor grad_input;
    Tensor grad_weights;
    std::vector<float> grad_bias;
};

FcGrads fullyconnected_backward(const Tensor& input, const LayerParams& params,
                                const Tensor& grad_out);

// ---------------------------------------------------------------------------
// ReLU. The gradient at exactly 0 is defined as 0.
// ---------------------------------------------------------------------------

Tensor relu_forward(const Tensor& input);
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);

// ---------------------------------------------------------------------------
// Batch normalization over (n, h, w) per channel. Train mode normalizes with
// batch statistics (biased variance) and folds them into the running
// statistics; infer mode uses the running statistics and fails if they were
// never initialized.
// ---------------------------------------------------------------------------

enum class BnMode { train, infer };

struct BnStats {
    std::vector<float> mean, var;
};

/// Train mode mutates params (running statistics); infer mode does not.
/// stats_out, when non-null, receives the batch statistics used (train mode).
Tensor batchnorm_forward(const Tensor& input, LayerParams& params, BnMode mode,
                         BnStats* stats_out = nullptr);

struct BnGrads {
    Tensor grad_input;
    std::vector<float> grad_gamma, grad_beta;
};

BnGrads batchnorm_backward(const Tensor& input, const LayerParams& params, const BnStats& stats,
                           const Tensor& grad_out);

// ---------------------------------------------------------------------------
// Weight initialization: zero-mean Gaussian with variance 2/fan_in, where
// fan_in = c*h*w of the weight tensor (in_c*3*3 for conv kernels, in_features
// for fully-connected weights). Biases are zeroed by the callers.
// ---------------------------------------------------------------------------

Tensor he_init(int n, int c, int h, int w, Rng& rng);

}  // namespace lc
