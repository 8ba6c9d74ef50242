#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lc {

/// Stochastic gradient descent settings. The step-decay schedule multiplies
/// the base rate by decay_factor at each epoch listed in decay_epochs; the
/// defaults give 0.01 for epochs 0-4, 0.001 for 5-14 and 0.0001 for 15-24.
struct OptimizerConfig {
    float base_lr = 0.01f;
    std::vector<int> decay_epochs{5, 15};
    float decay_factor = 0.1f;
    float momentum = 0.9f;
    int total_epochs = 25;
    int batch_size = 256;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Learning rate for the given epoch: base_lr * decay_factor^(number of decay
/// boundaries <= epoch). Errors if epoch is outside [0, total_epochs).
float lr_at_epoch(const OptimizerConfig& config, int epoch);

/// One momentum-SGD update: v <- momentum*v - lr*g; p <- p + v.
/// Errors on non-finite gradient values, naming the offending layer.
void sgd_step(float* params, const float* grads, float* velocity, std::size_t len, float lr,
              float momentum, const std::string& layer_name);

}  // namespace lc
