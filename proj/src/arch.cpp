#include "arch.hpp"

#include <algorithm>

#include "optim.hpp"

namespace lc {

const char* arch_kind_name(ArchKind k) {
    switch (k) {
        case ArchKind::lenet_like: return "lenet_like";
        case ArchKind::alexnet_like: return "alexnet_like";
        case ArchKind::vgg16_like: return "vgg16_like";
    }
    return "?";
}

ArchKind parse_arch_kind(const std::string& text) {
    if (text == "lenet_like") return ArchKind::lenet_like;
    if (text == "alexnet_like") return ArchKind::alexnet_like;
    if (text == "vgg16_like") return ArchKind::vgg16_like;
    raise_usage("unknown architecture '" + text +
                "' (expected lenet_like, alexnet_like or vgg16_like)");
}

ArchitectureSpec ArchitectureSpec::make(ArchKind kind, int r, int output_width) {
    ArchitectureSpec s;
    s.kind = kind;
    s.input_side = r;
    s.output_width = output_width;
    switch (kind) {
        case ArchKind::lenet_like:
            s.conv_blocks = {{16}, {32}};
            s.fc_hidden = 64;
            break;
        case ArchKind::alexnet_like:
            s.conv_blocks = {{16, 16}, {32, 32}};
            s.fc_hidden = 128;
            break;
        case ArchKind::vgg16_like:
            s.conv_blocks = {{32, 32}, {64, 64}, {128, 128, 128}};
            s.fc_hidden = 1024;
            break;
    }
    return s;
}

NetworkModel build_network(const ArchitectureSpec& spec, Rng& rng) {
    if (spec.input_side < 1) raise_usage("build_network: input side must be >= 1");
    if (spec.input_side % spec.pool_factor() != 0)
        raise_usage("build_network: input side " + std::to_string(spec.input_side) +
                    " is not divisible by the pooling factor " + std::to_string(spec.pool_factor()) +
                    " of " + arch_kind_name(spec.kind));
    if (spec.output_width < 1) raise_usage("build_network: output width must be >= 1");

    NetworkModel m;
    m.spec = spec;
    int channels = 3;
    int side = spec.input_side;
    for (const auto& block : spec.conv_blocks) {
        for (int oc : block) {
            LayerParams conv;
            conv.kind = LayerKind::conv3x3;
            conv.weights = he_init(oc, channels, 3, 3, rng);
            conv.bias.assign(oc, 0.0f);
            m.layers.push_back(std::move(conv));

            LayerParams bn;
            bn.kind = LayerKind::batchnorm;
            bn.bn_gamma.assign(oc, 1.0f);
            bn.bn_beta.assign(oc, 0.0f);
            bn.bn_running_mean.assign(oc, 0.0f);
            bn.bn_running_var.assign(oc, 1.0f);
            m.layers.push_back(std::move(bn));

            LayerParams relu;
            relu.kind = LayerKind::relu;
            m.layers.push_back(std::move(relu));
            channels = oc;
        }
        LayerParams pool;
        pool.kind = LayerKind::maxpool2x2;
        m.layers.push_back(std::move(pool));
        side /= 2;
    }

    const int flat = channels * side * side;
    LayerParams fc1;
    fc1.kind = LayerKind::fullyconnected;
    fc1.weights = he_init(spec.fc_hidden, flat, 1, 1, rng);
    fc1.bias.assign(spec.fc_hidden, 0.0f);
    m.layers.push_back(std::move(fc1));

    LayerParams relu;
    relu.kind = LayerKind::relu;
    m.layers.push_back(std::move(relu));

    LayerParams fc2;
    fc2.kind = LayerKind::fullyconnected;
    fc2.weights = he_init(spec.output_width, spec.fc_hidden, 1, 1, rng);
    fc2.bias.assign(spec.output_width, 0.0f);
    m.layers.push_back(std::move(fc2));
    return m;
}

std::size_t count_params(const NetworkModel& model) {
    std::size_t total = 0;
    for (const auto& l : model.layers) {
        total += l.weights.data.size();
        total += l.bias.size();
        total += l.bn_gamma.size();
        total += l.bn_beta.size();
    }
    return total;
}

Tensor forward(NetworkModel& model, const Tensor& batch, BnMode mode, ForwardCache* cache) {
    if (batch.c != 3)
        raise_usage("forward: expected 3-channel input, got " + batch.shape_str());
    if (batch.h != model.spec.input_side || batch.w != model.spec.input_side)
        raise_usage("forward: input is " + batch.shape_str() + ", model expects side " +
                    std::to_string(model.spec.input_side));
    if (cache) {
        cache->inputs.clear();
        cache->bn_stats.assign(model.layers.size(), {});
        cache->pool_idx.assign(model.layers.size(), {});
    }

    Tensor x = batch;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        LayerParams& l = model.layers[i];
        if (cache) cache->inputs.push_back(x);
        switch (l.kind) {
            case LayerKind::conv3x3:
                x = conv3x3_forward(x, l);
                break;
            case LayerKind::batchnorm: {
                BnStats stats;
                x = batchnorm_forward(x, l, mode, cache ? &stats : nullptr);
                if (cache) cache->bn_stats[i] = std::move(stats);
                break;
            }
            case LayerKind::relu:
                x = relu_forward(x);
                break;
            case LayerKind::maxpool2x2: {
                PoolResult r = maxpool2x2_forward(x);
                x = std::move(r.output);
                if (cache) cache->pool_idx[i] = std::move(r.indices);
                break;
            }
            case LayerKind::fullyconnected:
                x = fullyconnected_forward(x, l);
                break;
        }
    }
    return x;
}

std::vector<LayerGrads> backward(const NetworkModel& model, const ForwardCache& cache,
                                 const Tensor& grad_output) {
    if (cache.inputs.size() != model.layers.size())
        raise_usage("backward: cache does not match model (run forward with a cache first)");

    std::vector<LayerGrads> grads(model.layers.size());
    Tensor g = grad_output;
    for (std::size_t ri = model.layers.size(); ri-- > 0;) {
        const LayerParams& l = model.layers[ri];
        const Tensor& input = cache.inputs[ri];
        switch (l.kind) {
            case LayerKind::conv3x3: {
                ConvGrads cg = conv3x3_backward(input, l, g);
                grads[ri].weights = std::move(cg.grad_weights);
                grads[ri].bias = std::move(cg.grad_bias);
                g = std::move(cg.grad_input);
                break;
            }
            case LayerKind::batchnorm: {
                BnGrads bg = batchnorm_backward(input, l, cache.bn_stats[ri], g);
                grads[ri].gamma = std::move(bg.grad_gamma);
                grads[ri].beta = std::move(bg.grad_beta);
                g = std::move(bg.grad_input);
                break;
            }
            case LayerKind::relu:
                g = relu_backward(input, g);
                break;
            case LayerKind::maxpool2x2:
                g = maxpool2x2_backward(cache.pool_idx[ri], g);
                break;
            case LayerKind::fullyconnected: {
                // grad_out arrives shaped (n, out, 1, 1) already.
                FcGrads fg = fullyconnected_backward(input, l, g);
                grads[ri].weights = std::move(fg.grad_weights);
                grads[ri].bias = std::move(fg.grad_bias);
                g = std::move(fg.grad_input);
                break;
            }
        }
    }
    return grads;
}

VelocityState VelocityState::zeros_like(const NetworkModel& model) {
    VelocityState v;
    v.layers.resize(model.layers.size());
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& l = model.layers[i];
        v.layers[i].weights.assign(l.weights.data.size(), 0.0f);
        v.layers[i].bias.assign(l.bias.size(), 0.0f);
        v.layers[i].gamma.assign(l.bn_gamma.size(), 0.0f);
        v.layers[i].beta.assign(l.bn_beta.size(), 0.0f);
    }
    return v;
}

void apply_sgd(NetworkModel& model, const std::vector<LayerGrads>& grads, VelocityState& velocity,
               float lr, float momentum) {
    if (grads.size() != model.layers.size() || velocity.layers.size() != model.layers.size())
        raise_usage("apply_sgd: gradient/velocity layout does not match model");
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        LayerParams& l = model.layers[i];
        const LayerGrads& g = grads[i];
        VelocityState::Slot& v = velocity.layers[i];
        const std::string name = "layer" + std::to_string(i) + ":" + layer_kind_name(l.kind);
        if (!l.weights.empty())
            sgd_step(l.weights.data.data(), g.weights.data.data(), v.weights.data(),
                     l.weights.data.size(), lr, momentum, name);
        if (!l.bias.empty())
            sgd_step(l.bias.data(), g.bias.data(), v.bias.data(), l.bias.size(), lr, momentum, name);
        if (!l.bn_gamma.empty()) {
            sgd_step(l.bn_gamma.data(), g.gamma.data(), v.gamma.data(), l.bn_gamma.size(), lr,
                     momentum, name);
            sgd_step(l.bn_beta.data(), g.beta.data(), v.beta.data(), l.bn_beta.size(), lr, momentum,
                     name);
        }
    }
}

}  // namespace lc
