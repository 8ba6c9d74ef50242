#include "optim.hpp"

#include <cmath>

#include "error.hpp"

namespace lc {

void OptimizerConfig::validate() const {
    if (!(base_lr > 0.0f)) raise_usage("optimizer: base_lr must be > 0");
    if (!(decay_factor > 0.0f)) raise_usage("optimizer: decay_factor must be > 0");
    if (total_epochs < 1) raise_usage("optimizer: total_epochs must be >= 1");
    if (batch_size < 1) raise_usage("optimizer: batch_size must be >= 1");
    if (momentum < 0.0f || momentum >= 1.0f) raise_usage("optimizer: momentum must be in [0, 1)");
}

float lr_at_epoch(const OptimizerConfig& config, int epoch) {
    if (epoch < 0 || epoch >= config.total_epochs)
        raise_usage("lr_at_epoch: epoch " + std::to_string(epoch) + " outside [0, " +
                    std::to_string(config.total_epochs) + ")");
    float lr = config.base_lr;
    for (int boundary : config.decay_epochs)
        if (epoch >= boundary) lr *= config.decay_factor;
    return lr;
}

void sgd_step(float* params, const float* grads, float* velocity, std::size_t len, float lr,
              float momentum, const std::string& layer_name) {
    for (std::size_t i = 0; i < len; ++i)
        if (!std::isfinite(grads[i]))
            raise_numeric("sgd_step: non-finite gradient in layer '" + layer_name + "' at element " +
                          std::to_string(i));
    for (std::size_t i = 0; i < len; ++i) {
        velocity[i] = momentum * velocity[i] - lr * grads[i];
        params[i] += velocity[i];
    }
}

}  // namespace lc
