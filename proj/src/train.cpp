#include "train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rng.hpp"

namespace lc {

Tensor assemble_batch(const std::vector<PatchSample>& samples, const std::vector<int>& order,
                      std::size_t first, std::size_t count, int r, const ChannelMeans& means) {
    Tensor x(int(count), 3, r, r);
    const std::size_t stride = std::size_t(3) * r * r;
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)count; ++i) {
        const PatchSample& s = samples[order[first + i]];
        materialize_patch(s, r, means, x.data.data() + std::size_t(i) * stride);
    }
    return x;
}

namespace {

// Regression targets for one batch; length count*output_width. Count modes
// use the stored scalar; local-density mode reads the density window.
std::vector<float> assemble_targets(const std::vector<PatchSample>& samples,
                                    const std::vector<int>& order, std::size_t first,
                                    std::size_t count, int r, int output_width) {
    std::vector<float> t(count * std::size_t(output_width));
    if (output_width == 1) {
        for (std::size_t i = 0; i < count; ++i) t[i] = samples[order[first + i]].target;
        return t;
    }
    for (std::size_t i = 0; i < count; ++i) {
        const PatchSample& s = samples[order[first + i]];
        if (!s.density)
            raise_usage("train: local-density targets requested but sample carries no density map");
        float* dst = t.data() + i * std::size_t(output_width);
        for (int y = 0; y < r; ++y) {
            const float* row = &s.density->values[std::size_t(s.row0 + y) * s.density->w + s.col0];
            std::copy(row, row + r, dst + std::size_t(y) * r);
        }
    }
    return t;
}

double validation_mae(NetworkModel& model, const std::vector<PatchSample>& val,
                      const ChannelMeans& means, int batch_size) {
    if (val.empty()) return std::numeric_limits<double>::quiet_NaN();
    const int r = model.spec.input_side;
    const int ow = model.spec.output_width;
    std::vector<int> order(val.size());
    std::iota(order.begin(), order.end(), 0);
    double abs_err = 0.0;
    for (std::size_t first = 0; first < val.size(); first += std::size_t(batch_size)) {
        const std::size_t count = std::min(std::size_t(batch_size), val.size() - first);
        Tensor x = assemble_batch(val, order, first, count, r, means);
        Tensor out = forward(model, x, BnMode::infer);
        for (std::size_t i = 0; i < count; ++i) {
            double pred = 0.0;
            for (int j = 0; j < ow; ++j) pred += out.data[i * std::size_t(ow) + j];
            pred = std::max(0.0, pred);
            abs_err += std::fabs(pred - double(val[order[first + i]].target));
        }
    }
    return abs_err / double(val.size());
}

}  // namespace

TrainResult train(NetworkModel model, const std::vector<PatchSample>& train_samples,
                  const std::vector<PatchSample>& val_samples, const ChannelMeans& means,
                  const OptimizerConfig& optim, LossKind loss, float huber_delta,
                  const ProgressFn& progress) {
    optim.validate();
    if (train_samples.empty()) raise_usage("train: empty training set");
    const int r = model.spec.input_side;
    const int ow = model.spec.output_width;

    VelocityState velocity = VelocityState::zeros_like(model);
    Rng shuffle_rng(optim.seed);
    std::vector<int> order(train_samples.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    result.report.epochs.reserve(optim.total_epochs);

    for (int epoch = 0; epoch < optim.total_epochs; ++epoch) {
        const float lr = lr_at_epoch(optim, epoch);
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        ForwardCache cache;
        for (std::size_t first = 0; first < train_samples.size();
             first += std::size_t(optim.batch_size)) {
            const std::size_t count =
                std::min(std::size_t(optim.batch_size), train_samples.size() - first);
            Tensor x = assemble_batch(train_samples, order, first, count, r, means);
            const std::vector<float> targets =
                assemble_targets(train_samples, order, first, count, r, ow);

            Tensor out = forward(model, x, BnMode::train, &cache);
            LossResult lr_res = compute_loss(loss, out.data, targets, huber_delta);
            if (!std::isfinite(lr_res.value))
                raise_numeric("train: non-finite loss at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(first / optim.batch_size));
            loss_sum += lr_res.value * double(count);

            Tensor grad_out(int(count), ow, 1, 1);
            grad_out.data = std::move(lr_res.grad);
            const std::vector<LayerGrads> grads = backward(model, cache, grad_out);
            apply_sgd(model, grads, velocity, lr, optim.momentum);
        }

        TrainReport::Epoch entry;
        entry.epoch = epoch;
        entry.lr = lr;
        entry.train_loss = loss_sum / double(train_samples.size());
        entry.val_mae = validation_mae(model, val_samples, means, optim.batch_size);
        result.report.epochs.push_back(entry);
        if (progress) progress(entry);
    }

    result.model = std::move(model);
    return result;
}

}  // namespace lc
