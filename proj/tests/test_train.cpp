#include <doctest.h>

#include "train.hpp"
#include "testutil.hpp"

using namespace lc;

namespace {

// A self-contained in-memory dataset: one shared image, patches referencing
// it. Targets are provided by the caller.
struct MiniData {
    Image image;
    std::vector<PatchSample> samples;

    MiniData(int side, int n_patches, Rng& rng, float target) {
        image = Image(side, side);
        for (auto& v : image.pixels) v = float(rng.uniform(0.0, 255.0));
        for (int i = 0; i < n_patches; ++i) {
            PatchSample s;
            s.image = &image;
            s.row0 = rng.uniform_int(0, side - 16);
            s.col0 = rng.uniform_int(0, side - 16);
            s.target = target;
            samples.push_back(s);
        }
    }
};

}  // namespace

TEST_CASE("train: constant targets on constant inputs are fit almost exactly") {
    Rng rng(21);
    Image flat(64, 64);
    for (auto& v : flat.pixels) v = 120.0f;
    std::vector<PatchSample> samples;
    for (int i = 0; i < 120; ++i) {
        PatchSample s;
        s.image = &flat;
        s.row0 = (i * 7) % 48;
        s.col0 = (i * 13) % 48;
        s.target = 0.7f;
        samples.push_back(s);
    }
    const SplitSamples split = shuffle_split(samples, 0.9, 3);
    const ChannelMeans means = compute_channel_mean(split.train, 16);

    Rng init(5);
    NetworkModel model = build_network(ArchitectureSpec::make(ArchKind::lenet_like, 16), init);
    OptimizerConfig optim;
    optim.total_epochs = 25;
    optim.batch_size = 32;
    optim.seed = 11;
    const TrainResult result =
        train(std::move(model), split.train, split.val, means, optim, LossKind::l2, 1.0f);
    CHECK(result.report.epochs.size() == 25);
    CHECK(result.report.epochs.back().val_mae < 0.05);
}

TEST_CASE("train: 64 patches overfit at a fixed learning rate") {
    Rng rng(22);
    MiniData data(96, 64, rng, 0.0f);
    for (auto& s : data.samples) s.target = float(rng.uniform(0.0, 2.0));

    const ChannelMeans means = compute_channel_mean(data.samples, 16);
    Rng init(9);
    NetworkModel model = build_network(ArchitectureSpec::make(ArchKind::lenet_like, 16), init);
    OptimizerConfig optim;
    optim.total_epochs = 200;
    optim.batch_size = 64;  // single batch
    optim.base_lr = 0.02f;
    optim.decay_epochs = {};  // fixed rate
    optim.seed = 13;
    const TrainResult result =
        train(std::move(model), data.samples, {}, means, optim, LossKind::l2, 1.0f);

    const auto& ep = result.report.epochs;
    REQUIRE(ep.size() == 200);
    for (int e = 1; e < 10; ++e) CHECK(ep[e].train_loss <= ep[e - 1].train_loss);
    CHECK(ep.back().train_loss < 0.1 * ep.front().train_loss);
}

TEST_CASE("train: identical seeds give identical reports and parameters") {
    auto run = [] {
        Rng rng(23);
        MiniData data(64, 80, rng, 1.0f);
        for (auto& s : data.samples) s.target = float(rng.uniform(0.0, 3.0));
        const SplitSamples split = shuffle_split(data.samples, 0.9, 5);
        const ChannelMeans means = compute_channel_mean(split.train, 16);
        Rng init(7);
        NetworkModel model = build_network(ArchitectureSpec::make(ArchKind::lenet_like, 16), init);
        OptimizerConfig optim;
        optim.total_epochs = 3;
        optim.batch_size = 16;
        optim.seed = 99;
        return train(std::move(model), split.train, split.val, means, optim, LossKind::l1, 1.0f);
    };
    const TrainResult a = run();
    const TrainResult b = run();
    REQUIRE(a.report.epochs.size() == b.report.epochs.size());
    for (std::size_t i = 0; i < a.report.epochs.size(); ++i) {
        CHECK(a.report.epochs[i].train_loss == b.report.epochs[i].train_loss);
        CHECK(a.report.epochs[i].val_mae == b.report.epochs[i].val_mae);
    }
    for (std::size_t i = 0; i < a.model.layers.size(); ++i)
        for (std::size_t j = 0; j < a.model.layers[i].weights.data.size(); ++j)
            CHECK(a.model.layers[i].weights.data[j] == b.model.layers[i].weights.data[j]);
}

TEST_CASE("train: one l2 step on one sample decreases its loss at small lr") {
    Rng rng(24);
    MiniData data(32, 1, rng, 2.0f);
    const ChannelMeans means = compute_channel_mean(data.samples, 16);

    Rng init(3);
    NetworkModel model = build_network(ArchitectureSpec::make(ArchKind::lenet_like, 16), init);

    auto loss_of = [&](NetworkModel& m) {
        const std::vector<int> order{0};
        Tensor x = assemble_batch(data.samples, order, 0, 1, 16, means);
        Tensor out = forward(m, x, BnMode::train);
        return compute_loss(LossKind::l2, out.data, {data.samples[0].target}, 1.0f).value;
    };

    OptimizerConfig optim;
    optim.total_epochs = 1;
    optim.batch_size = 1;
    optim.base_lr = 1e-4f;
    optim.momentum = 0.0f;
    optim.seed = 1;

    NetworkModel before = model;  // copy for the pre-step loss
    const double loss_before = loss_of(before);
    const TrainResult result =
        train(std::move(model), data.samples, {}, means, optim, LossKind::l2, 1.0f);
    NetworkModel after = result.model;
    const double loss_after = loss_of(after);
    CHECK(loss_after < loss_before);
}

TEST_CASE("train: non-finite targets abort with a numeric error") {
    Rng rng(25);
    MiniData data(32, 4, rng, std::numeric_limits<float>::infinity());
    const ChannelMeans means = compute_channel_mean(data.samples, 16);
    Rng init(2);
    NetworkModel model = build_network(ArchitectureSpec::make(ArchKind::lenet_like, 16), init);
    OptimizerConfig optim;
    optim.total_epochs = 1;
    optim.batch_size = 4;
    try {
        train(std::move(model), data.samples, {}, means, optim, LossKind::l2, 1.0f);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::numeric);
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
}

TEST_CASE("train: empty training set is rejected") {
    Rng init(2);
    NetworkModel model = build_network(ArchitectureSpec::make(ArchKind::lenet_like, 16), init);
    OptimizerConfig optim;
    CHECK_THROWS_AS(train(std::move(model), {}, {}, ChannelMeans{}, optim, LossKind::l1, 1.0f),
                    Error);
}
