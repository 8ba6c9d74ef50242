#pragma once

#include <string>
#include <vector>

#include "layers.hpp"

namespace lc {

enum class ArchKind { lenet_like, alexnet_like, vgg16_like };

const char* arch_kind_name(ArchKind k);
ArchKind parse_arch_kind(const std::string& text);

/// Concrete layer plan of one of the three reference architectures. All
/// convolutions are 3x3/pad 1/stride 1, every conv is followed by batch norm
/// then ReLU, each block ends in 2x2 max pooling and doubles the channel
/// count, and the stack finishes with two fully-connected layers (hidden one
/// ReLU-activated, final one linear). output_width is 1 for count regression
/// and r*r when the regression target is a local density window.
///
/// Channel plans (parameter totals at r = 32, output_width 1):
///   lenet_like    conv16 | conv32 | fc64, fc1            136,385
///   alexnet_like  conv16,16 | conv32,32 | fc128, fc1     279,249
///   vgg16_like    conv32,32 | conv64,64 | conv128,128,128 | fc1024, fc1
///                                                      2,534,945
struct ArchitectureSpec {
    ArchKind kind = ArchKind::alexnet_like;
    std::vector<std::vector<int>> conv_blocks;  // channels per conv; pool after each block
    int fc_hidden = 128;
    int input_side = 32;   // r
    int output_width = 1;

    static ArchitectureSpec make(ArchKind kind, int r, int output_width = 1);

    int pool_factor() const { return 1 << int(conv_blocks.size()); }
};

struct NetworkModel {
    ArchitectureSpec spec;
    std::vector<LayerParams> layers;
};

/// He-initialized stack per the spec; fails if r is not divisible by the
/// architecture's total pooling factor.
NetworkModel build_network(const ArchitectureSpec& spec, Rng& rng);

/// Learnable parameter count: weights, biases, gammas and betas. Running
/// statistics are excluded.
std::size_t count_params(const NetworkModel& model);

/// Per-layer activation caches needed to run backward.
struct ForwardCache {
    std::vector<Tensor> inputs;        // input tensor of each layer
    std::vector<BnStats> bn_stats;     // batch statistics, batchnorm layers only
    std::vector<PoolIndices> pool_idx; // maxpool layers only
};

/// Runs the stack on a batch. In train mode batch-norm running statistics are
/// updated and, when cache is non-null, everything backward needs is stored.
Tensor forward(NetworkModel& model, const Tensor& batch, BnMode mode,
               ForwardCache* cache = nullptr);

struct LayerGrads {
    Tensor weights;                       // conv/fc
    std::vector<float> bias;              // conv/fc
    std::vector<float> gamma, beta;       // batchnorm
};

/// Backpropagates grad_output through the cached forward pass; returns one
/// gradient record per layer (empty for relu/maxpool).
std::vector<LayerGrads> backward(const NetworkModel& model, const ForwardCache& cache,
                                 const Tensor& grad_output);

/// Momentum buffers mirroring the model's parameter layout.
struct VelocityState {
    struct Slot {
        std::vector<float> weights, bias, gamma, beta;
    };
    std::vector<Slot> layers;

    static VelocityState zeros_like(const NetworkModel& model);
};

void apply_sgd(NetworkModel& model, const std::vector<LayerGrads>& grads, VelocityState& velocity,
               float lr, float momentum);

}  // namespace lc
