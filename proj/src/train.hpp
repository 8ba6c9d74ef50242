#pragma once

#include <functional>

#include "arch.hpp"
#include "dataset.hpp"
#include "loss.hpp"
#include "optim.hpp"

namespace lc {

struct TrainReport {
    struct Epoch {
        int epoch = 0;
        float lr = 0.0f;
        double train_loss = 0.0;
        double val_mae = 0.0;
    };
    std::vector<Epoch> epochs;
};

using ProgressFn = std::function<void(const TrainReport::Epoch&)>;

struct TrainResult {
    NetworkModel model;
    TrainReport report;
};

/// Mini-batch SGD over the given patches for optim.total_epochs epochs with
/// the step-decay schedule. Training order is reshuffled every epoch from the
/// seed, so identical inputs give identical results. Per-epoch validation MAE
/// treats each validation patch's predicted count (clamped at 0, summed over
/// the output vector in local-density mode) against its target count. The
/// returned model is the final epoch's, not the best-validation one.
TrainResult train(NetworkModel model, const std::vector<PatchSample>& train_samples,
                  const std::vector<PatchSample>& val_samples, const ChannelMeans& means,
                  const OptimizerConfig& optim, LossKind loss, float huber_delta,
                  const ProgressFn& progress = {});

/// Batch assembly shared with inference-time evaluation: materializes samples
/// [first, first+count) of `order` into a (count, 3, r, r) tensor.
Tensor assemble_batch(const std::vector<PatchSample>& samples, const std::vector<int>& order,
                      std::size_t first, std::size_t count, int r, const ChannelMeans& means);

}  // namespace lc
