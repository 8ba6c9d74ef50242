#include <doctest.h>

#include "layers.hpp"
#include "testutil.hpp"

using namespace lc;
using lc::test::random_tensor;

namespace {

LayerParams conv_params(Tensor weights, std::vector<float> bias) {
    LayerParams p;
    p.kind = LayerKind::conv3x3;
    p.weights = std::move(weights);
    p.bias = std::move(bias);
    return p;
}

LayerParams fc_params(Tensor weights, std::vector<float> bias) {
    LayerParams p;
    p.kind = LayerKind::fullyconnected;
    p.weights = std::move(weights);
    p.bias = std::move(bias);
    return p;
}

LayerParams bn_params(int c) {
    LayerParams p;
    p.kind = LayerKind::batchnorm;
    p.bn_gamma.assign(c, 1.0f);
    p.bn_beta.assign(c, 0.0f);
    p.bn_running_mean.assign(c, 0.0f);
    p.bn_running_var.assign(c, 1.0f);
    return p;
}

}  // namespace

TEST_CASE("conv3x3: zero input gives the bias everywhere") {
    Rng rng(1);
    Tensor in(1, 1, 3, 3);
    auto p = conv_params(random_tensor(2, 1, 3, 3, rng), {0.5f, -1.25f});
    const Tensor out = conv3x3_forward(in, p);
    for (int oc = 0; oc < 2; ++oc)
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x) CHECK(out.at(0, oc, y, x) == p.bias[oc]);
}

TEST_CASE("conv3x3: identity-center kernel reproduces the input") {
    Rng rng(2);
    Tensor in = random_tensor(1, 1, 3, 3, rng);
    Tensor w(1, 1, 3, 3);
    w.at(0, 0, 1, 1) = 1.0f;
    auto p = conv_params(std::move(w), {0.0f});
    const Tensor out = conv3x3_forward(in, p);
    for (std::size_t i = 0; i < in.size(); ++i) CHECK(out.data[i] == in.data[i]);
}

TEST_CASE("conv3x3: random case matches the six-nested-loop reference") {
    Rng rng(3);
    Tensor in = random_tensor(1, 2, 5, 5, rng);
    Tensor w = random_tensor(3, 2, 3, 3, rng);
    std::vector<float> bias = {0.1f, -0.2f, 0.3f};
    auto p = conv_params(w, bias);
    const Tensor out = conv3x3_forward(in, p);
    const Tensor ref = test::conv3x3_reference(in, w, bias);
    REQUIRE(out.same_shape(ref));
    for (std::size_t i = 0; i < out.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(ref.data[i]).epsilon(1e-5));
}

TEST_CASE("conv3x3 preserves spatial dimensions") {
    Rng rng(4);
    for (auto [h, w] : {std::pair<int, int>{1, 1}, {1, 7}, {5, 2}, {8, 8}}) {
        Tensor in = random_tensor(2, 3, h, w, rng);
        auto p = conv_params(random_tensor(4, 3, 3, 3, rng), std::vector<float>(4, 0.0f));
        const Tensor out = conv3x3_forward(in, p);
        CHECK(out.h == h);
        CHECK(out.w == w);
        CHECK(out.c == 4);
    }
}

TEST_CASE("conv3x3 rejects mismatched shapes with a message naming dimensions") {
    Rng rng(5);
    Tensor in = random_tensor(1, 2, 4, 4, rng);
    auto p = conv_params(random_tensor(3, 5, 3, 3, rng), std::vector<float>(3, 0.0f));
    try {
        conv3x3_forward(in, p);
        CHECK(false);
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("2") != std::string::npos);
        CHECK(msg.find("5") != std::string::npos);
    }
}

TEST_CASE("conv3x3 backward: zero upstream gradient gives zero gradients") {
    Rng rng(6);
    Tensor in = random_tensor(1, 2, 4, 4, rng);
    auto p = conv_params(random_tensor(3, 2, 3, 3, rng), std::vector<float>(3, 0.0f));
    Tensor gout(1, 3, 4, 4);
    const ConvGrads g = conv3x3_backward(in, p, gout);
    for (float v : g.grad_input.data) CHECK(v == 0.0f);
    for (float v : g.grad_weights.data) CHECK(v == 0.0f);
    for (float v : g.grad_bias) CHECK(v == 0.0f);
}

TEST_CASE("conv3x3 backward: identity kernel routes a single pixel straight through") {
    Tensor in(1, 1, 5, 5);
    Tensor w(1, 1, 3, 3);
    w.at(0, 0, 1, 1) = 1.0f;
    auto p = conv_params(std::move(w), {0.0f});
    Tensor gout(1, 1, 5, 5);
    gout.at(0, 0, 2, 3) = 1.0f;
    const ConvGrads g = conv3x3_backward(in, p, gout);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x)
            CHECK(g.grad_input.at(0, 0, y, x) == (y == 2 && x == 3 ? 1.0f : 0.0f));
}

TEST_CASE("maxpool2x2: single block") {
    Tensor in(1, 1, 2, 2);
    in.at(0, 0, 0, 0) = 1.0f;
    in.at(0, 0, 0, 1) = 2.0f;
    in.at(0, 0, 1, 0) = 3.0f;
    in.at(0, 0, 1, 1) = 4.0f;
    const PoolResult r = maxpool2x2_forward(in);
    CHECK(r.output.h == 1);
    CHECK(r.output.w == 1);
    CHECK(r.output.at(0, 0, 0, 0) == 4.0f);
    CHECK(r.indices.pos[0] == 3);
}

TEST_CASE("maxpool2x2: ties go to the first position in scan order") {
    Tensor in(1, 1, 2, 2);
    in.fill(1.5f);
    const PoolResult r = maxpool2x2_forward(in);
    CHECK(r.output.at(0, 0, 0, 0) == 1.5f);
    CHECK(r.indices.pos[0] == 0);
}

TEST_CASE("maxpool2x2 matches the nested-loop oracle and halves dimensions") {
    Rng rng(7);
    Tensor in = random_tensor(1, 3, 8, 8, rng);
    const PoolResult r = maxpool2x2_forward(in);
    const Tensor ref = test::maxpool2x2_reference(in);
    CHECK(r.output.h == 4);
    CHECK(r.output.w == 4);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(r.output.data[i] == ref.data[i]);
}

TEST_CASE("maxpool2x2 rejects odd spatial dimensions") {
    Rng rng(8);
    CHECK_THROWS_AS(maxpool2x2_forward(random_tensor(1, 1, 3, 4, rng)), Error);
    CHECK_THROWS_AS(maxpool2x2_forward(random_tensor(1, 1, 4, 7, rng)), Error);
}

TEST_CASE("maxpool2x2 backward: one unit per block, sum preserved") {
    Rng rng(9);
    Tensor in = random_tensor(2, 2, 6, 6, rng);
    const PoolResult r = maxpool2x2_forward(in);
    Tensor gout(2, 2, 3, 3);
    for (auto& v : gout.data) v = 1.0f;
    const Tensor gin = maxpool2x2_backward(r.indices, gout);
    double gin_sum = 0.0;
    for (float v : gin.data) {
        CHECK((v == 0.0f || v == 1.0f));
        gin_sum += v;
    }
    CHECK(gin_sum == doctest::Approx(gout.size()));  // one winner per block
}

TEST_CASE("maxpool2x2 backward: zero grad_out gives zero grad_in") {
    Rng rng(10);
    Tensor in = random_tensor(1, 1, 4, 4, rng);
    const PoolResult r = maxpool2x2_forward(in);
    Tensor gout(1, 1, 2, 2);
    const Tensor gin = maxpool2x2_backward(r.indices, gout);
    for (float v : gin.data) CHECK(v == 0.0f);
}

TEST_CASE("maxpool2x2 backward rejects out-of-bounds argmax indices") {
    PoolIndices idx;
    idx.n = idx.c = 1;
    idx.h = idx.w = 1;
    idx.pos = {7};
    Tensor gout(1, 1, 1, 1);
    CHECK_THROWS_AS(maxpool2x2_backward(idx, gout), Error);
}

TEST_CASE("fully connected: identity weights flatten the input") {
    Rng rng(11);
    Tensor in = random_tensor(2, 2, 2, 2, rng);
    Tensor w(8, 8, 1, 1);
    for (int i = 0; i < 8; ++i) w.data[std::size_t(i) * 8 + i] = 1.0f;
    auto p = fc_params(std::move(w), std::vector<float>(8, 0.0f));
    const Tensor out = fullyconnected_forward(in, p);
    for (std::size_t i = 0; i < in.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(in.data[i]).epsilon(1e-6));
}

TEST_CASE("fully connected: zero input gives the bias") {
    Tensor in(3, 4, 1, 1);
    Rng rng(12);
    auto p = fc_params(random_tensor(2, 4, 1, 1, rng), {0.25f, -3.0f});
    const Tensor out = fullyconnected_forward(in, p);
    for (int n = 0; n < 3; ++n) {
        CHECK(out.data[n * 2 + 0] == 0.25f);
        CHECK(out.data[n * 2 + 1] == -3.0f);
    }
}

TEST_CASE("fully connected matches the naive matrix-vector oracle") {
    Rng rng(13);
    Tensor in = random_tensor(3, 2, 3, 4, rng);
    Tensor w = random_tensor(5, 24, 1, 1, rng);
    std::vector<float> bias(5);
    for (auto& b : bias) b = float(rng.uniform(-1, 1));
    auto p = fc_params(w, bias);
    const Tensor out = fullyconnected_forward(in, p);
    const Tensor ref = test::fullyconnected_reference(in, w, bias);
    for (std::size_t i = 0; i < out.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(ref.data[i]).epsilon(1e-5));
}

TEST_CASE("fully connected rejects dimension mismatch") {
    Rng rng(14);
    Tensor in = random_tensor(1, 3, 4, 4, rng);
    auto p = fc_params(random_tensor(2, 47, 1, 1, rng), std::vector<float>(2, 0.0f));
    CHECK_THROWS_AS(fullyconnected_forward(in, p), Error);
}

TEST_CASE("relu forward and idempotence") {
    Tensor in(1, 1, 1, 3);
    in.data = {-1.0f, 0.0f, 2.0f};
    const Tensor out = relu_forward(in);
    CHECK(out.data[0] == 0.0f);
    CHECK(out.data[1] == 0.0f);
    CHECK(out.data[2] == 2.0f);
    const Tensor twice = relu_forward(out);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(twice.data[i] == out.data[i]);
}

TEST_CASE("relu backward: all-negative input blocks every gradient") {
    Rng rng(15);
    Tensor in = random_tensor(1, 2, 3, 3, rng, -2.0, -0.1);
    Tensor gout = random_tensor(1, 2, 3, 3, rng);
    const Tensor gin = relu_backward(in, gout);
    for (float v : gin.data) CHECK(v == 0.0f);
}

TEST_CASE("batchnorm train mode normalizes each channel") {
    Rng rng(16);
    Tensor in = random_tensor(4, 3, 6, 6, rng, -3.0, 5.0);
    auto p = bn_params(3);
    const Tensor out = batchnorm_forward(in, p, BnMode::train);
    const std::size_t cnt = 4 * 6 * 6;
    for (int c = 0; c < 3; ++c) {
        double sum = 0.0, sq = 0.0;
        for (int n = 0; n < 4; ++n)
            for (int y = 0; y < 6; ++y)
                for (int x = 0; x < 6; ++x) {
                    const double v = out.at(n, c, y, x);
                    sum += v;
                    sq += v * v;
                }
        const double mean = sum / double(cnt);
        const double var = sq / double(cnt) - mean * mean;
        CHECK(std::fabs(mean) < 1e-4);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
    }
    CHECK(p.bn_initialized);
}

TEST_CASE("batchnorm: constant channel degenerates to beta") {
    Tensor in(2, 2, 3, 3);
    in.fill(4.2f);
    auto p = bn_params(2);
    p.bn_beta = {0.7f, -0.3f};
    const Tensor out = batchnorm_forward(in, p, BnMode::train);
    for (int n = 0; n < 2; ++n)
        for (int c = 0; c < 2; ++c)
            for (int y = 0; y < 3; ++y)
                for (int x = 0; x < 3; ++x)
                    CHECK(out.at(n, c, y, x) == doctest::Approx(p.bn_beta[c]).epsilon(1e-5));
}

TEST_CASE("batchnorm: infer with running = batch statistics reproduces train output") {
    Rng rng(17);
    Tensor in = random_tensor(3, 2, 4, 4, rng);
    auto p = bn_params(2);
    p.bn_gamma = {1.3f, 0.8f};
    p.bn_beta = {-0.2f, 0.4f};
    BnStats stats;
    auto p_train = p;
    const Tensor train_out = batchnorm_forward(in, p_train, BnMode::train, &stats);
    auto p_infer = p;
    p_infer.bn_running_mean = stats.mean;
    p_infer.bn_running_var = stats.var;
    p_infer.bn_initialized = true;
    const Tensor infer_out = batchnorm_forward(in, p_infer, BnMode::infer);
    for (std::size_t i = 0; i < train_out.size(); ++i)
        CHECK(infer_out.data[i] == doctest::Approx(train_out.data[i]).epsilon(1e-4));
}

TEST_CASE("batchnorm: running statistics blend with momentum 0.1") {
    Rng rng(18);
    Tensor in = random_tensor(2, 1, 4, 4, rng, 1.0, 3.0);
    auto p = bn_params(1);
    p.bn_running_mean = {1.0f};
    p.bn_running_var = {2.0f};
    BnStats stats;
    batchnorm_forward(in, p, BnMode::train, &stats);
    CHECK(p.bn_running_mean[0] ==
          doctest::Approx(0.9f * 1.0f + 0.1f * stats.mean[0]).epsilon(1e-6));
    CHECK(p.bn_running_var[0] == doctest::Approx(0.9f * 2.0f + 0.1f * stats.var[0]).epsilon(1e-6));
}

TEST_CASE("batchnorm infer without initialized running statistics fails") {
    Rng rng(19);
    Tensor in = random_tensor(1, 2, 2, 2, rng);
    auto p = bn_params(2);
    CHECK_THROWS_AS(batchnorm_forward(in, p, BnMode::infer), Error);
}

TEST_CASE("batchnorm backward: grad_beta is the per-channel sum of grad_out") {
    Rng rng(20);
    Tensor in = random_tensor(2, 3, 4, 4, rng);
    auto p = bn_params(3);
    BnStats stats;
    batchnorm_forward(in, p, BnMode::train, &stats);
    Tensor gout = random_tensor(2, 3, 4, 4, rng);
    const BnGrads g = batchnorm_backward(in, p, stats, gout);
    for (int c = 0; c < 3; ++c) {
        double want = 0.0;
        for (int n = 0; n < 2; ++n)
            for (int y = 0; y < 4; ++y)
                for (int x = 0; x < 4; ++x) want += gout.at(n, c, y, x);
        CHECK(g.grad_beta[c] == doctest::Approx(want).epsilon(1e-4));
    }
}

TEST_CASE("he_init: variance 2/fan_in and bit-identical under a fixed seed") {
    Rng rng(123);
    // fan_in = c*h*w = 2 so the variance target is exactly 1.
    Tensor t = he_init(500000, 2, 1, 1, rng);
    double sum = 0.0, sq = 0.0;
    for (float v : t.data) {
        sum += v;
        sq += double(v) * v;
    }
    const double n = double(t.size());
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(var == doctest::Approx(1.0).epsilon(0.05));
    CHECK(std::fabs(mean) < 3.0 / std::sqrt(n));  // 3 standard errors of N(0,1)

    Rng r1(77), r2(77);
    const Tensor a = he_init(4, 3, 3, 3, r1);
    const Tensor b = he_init(4, 3, 3, 3, r2);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data[i] == b.data[i]);
}
