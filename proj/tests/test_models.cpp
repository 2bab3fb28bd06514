#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "sonarprop/errors.hpp"
#include "sonarprop/models.hpp"

using namespace sonarprop;

namespace {

// Hand count per layer: weights (out * in * kh * kw or out * in) plus biases.
constexpr std::size_t conv_params(std::size_t out, std::size_t in, std::size_t k) { return out * in * k * k + out; }
constexpr std::size_t dense_params(std::size_t out, std::size_t in) { return out * in + out; }

Network zero_network(Network net) {
    for (auto& p : net.params) {
        p.weights.fill(0.0f);
        p.bias.fill(0.0f);
    }
    return net;
}

}  // namespace

TEST_CASE("CNN layer listing") {
    const Network cnn = build_cnn();
    const std::vector<LayerKind> kinds{LayerKind::conv,  LayerKind::relu,    LayerKind::maxpool, LayerKind::conv,
                                       LayerKind::relu,  LayerKind::maxpool, LayerKind::dense,   LayerKind::relu,
                                       LayerKind::dense, LayerKind::sigmoid};
    REQUIRE(cnn.spec.layers.size() == kinds.size());
    for (std::size_t i = 0; i < kinds.size(); ++i) CHECK(cnn.spec.layers[i].kind == kinds[i]);
    CHECK(cnn.spec.layers[0].conv.out_channels == 32);
    CHECK(cnn.spec.layers[0].conv.kernel_h == 5);
    CHECK(cnn.spec.layers[3].conv.out_channels == 32);
    CHECK(cnn.spec.layers[6].units == 96);
    CHECK(cnn.spec.layers[8].units == 1);
}

TEST_CASE("CNN parameter count matches the per-layer hand count") {
    // valid: 96 -> 92 -> 46 -> 42 -> 21
    constexpr std::size_t expected =
        conv_params(32, 1, 5) + conv_params(32, 32, 5) + dense_params(96, 32 * 21 * 21) + dense_params(1, 96);
    static_assert(expected == 1381409);
    CHECK(param_count(build_cnn().spec) == expected);
    CHECK(param_count(build_cnn().params) == expected);
}

TEST_CASE("FCN parameter count is 20473") {
    constexpr std::size_t expected = conv_params(24, 1, 3) + conv_params(24, 24, 1) + conv_params(24, 24, 3) +
                                     conv_params(24, 24, 1) + dense_params(1, 24 * 24 * 24);
    static_assert(expected == 20473);
    CHECK(param_count(build_fcn_tiny().spec) == 20473);
    CHECK(param_count(build_fcn_tiny().params) == 20473);
}

TEST_CASE("param_count edge cases") {
    CHECK(param_count(NetworkSpec{}) == 0);
    NetworkSpec single;
    single.layers = {LayerSpec::fully_connected(1)};
    single.input_channels = 1;
    single.input_height = 1;
    single.input_width = 37;
    CHECK(param_count(single) == 38);
}

TEST_CASE("FCN spatial extents 96-96-96-48-48-48-24") {
    const Network fcn = build_fcn_tiny();
    const auto shapes = layer_shapes(fcn.spec, fcn.spec.input_shape());
    std::vector<std::size_t> extents{96};
    for (std::size_t i = 0; i < shapes.size(); ++i)
        if (fcn.spec.layers[i].kind == LayerKind::conv || fcn.spec.layers[i].kind == LayerKind::maxpool)
            extents.push_back(shapes[i][1]);
    CHECK(extents == std::vector<std::size_t>{96, 96, 96, 48, 48, 48, 24});
}

TEST_CASE("initialization is Glorot uniform with zero biases, deterministic per seed") {
    const Network a = build_fcn_tiny(42), b = build_fcn_tiny(42), c = build_fcn_tiny(43);
    CHECK(a.params == b.params);
    CHECK_FALSE(a.params == c.params);
    const float limit = std::sqrt(6.0f / (9.0f + 24.0f * 9.0f));
    for (float v : a.params[0].weights.values()) CHECK(std::abs(v) <= limit);
    for (const auto& p : a.params)
        for (float v : p.bias.values()) CHECK(v == 0.0f);
}

TEST_CASE("forward_patch: range, determinism, zero weights") {
    std::mt19937_64 rng(1);
    const Network cnn = build_cnn(3), fcn = build_fcn_tiny(3);
    for (int i = 0; i < 5; ++i) {
        const Tensor p = oracle::random_tensor({1, 96, 96}, rng, 0, 1);
        for (const Network* n : {&cnn, &fcn}) {
            const float s = forward_patch(*n, p);
            CHECK(s > 0.0f);
            CHECK(s < 1.0f);
            CHECK(forward_patch(*n, p) == s);
        }
    }
    CHECK(forward_patch(zero_network(build_fcn_tiny()), Tensor({1, 96, 96})) == 0.5f);
    CHECK(forward_patch(zero_network(build_cnn()), Tensor({1, 96, 96})) == 0.5f);
    CHECK_THROWS_AS(forward_patch(fcn, Tensor({1, 95, 96})), InvalidInput);
    CHECK_THROWS_AS(forward_patch(fcn, Tensor({2, 96, 96})), InvalidInput);
}

TEST_CASE("fc_to_conv: equivalence on patches") {
    std::mt19937_64 rng(2);
    const Network fcn = build_fcn_tiny(5);
    const Network conv = fc_to_conv(fcn);
    CHECK(is_fully_convolutional(conv.spec));
    CHECK_FALSE(is_fully_convolutional(fcn.spec));
    CHECK(conv.spec.layers[10].conv.kernel_h == 24);
    CHECK(param_count(conv.params) == 20473);
    for (int i = 0; i < 50; ++i) {
        const Tensor p = oracle::random_tensor({1, 96, 96}, rng, 0, 1);
        const Tensor out = forward(conv, p);
        REQUIRE(out.shape() == std::vector<std::size_t>{1, 1, 1});
        CHECK(std::abs(out[0] - forward_patch(fcn, p)) <= 1e-5f);
    }
}

TEST_CASE("fc_to_conv: wider inputs give one output per 4 pixels") {
    const Network conv = fc_to_conv(build_fcn_tiny(6));
    for (std::size_t k : {1u, 3u, 10u}) {
        const Tensor out = forward(conv, Tensor({1, 96, 96 + 4 * k}, 0.25f));
        CHECK(out.shape() == std::vector<std::size_t>{1, 1, 1 + k});
    }
}

TEST_CASE("fc_to_conv: zero weights give sigmoid(bias) everywhere") {
    Network fcn = zero_network(build_fcn_tiny());
    fcn.params[10].bias[0] = 0.75f;
    const Tensor out = forward(fc_to_conv(fcn), Tensor({1, 120, 200}, 0.3f));
    const float expected = 1.0f / (1.0f + std::exp(-0.75f));
    for (float v : out.values()) CHECK(v == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("fc_to_conv: rejects networks without a final dense layer") {
    const Network conv = fc_to_conv(build_fcn_tiny());
    CHECK_THROWS_AS(fc_to_conv(conv), InvalidInput);
    // The CNN has two dense layers; only the last may be converted.
    CHECK_THROWS_AS(fc_to_conv(build_cnn()), InvalidInput);
}

TEST_CASE("backward matches finite differences through a whole small network") {
    std::mt19937_64 rng(3);
    NetworkSpec spec;
    spec.layers = {LayerSpec::convolution(3, 3, Padding::same), LayerSpec::relu_activation(), LayerSpec::max_pool(2),
                   LayerSpec::convolution(2, 1, Padding::same), LayerSpec::relu_activation(),
                   LayerSpec::fully_connected(1)};
    spec.input_height = 8;
    spec.input_width = 8;
    Network net{spec, init_parameters(spec, 9)};
    for (auto& p : net.params)
        for (float& v : p.bias.values()) v = 0.1f;
    const Tensor x = oracle::distinct_tensor({1, 8, 8}, rng, 0.015f);
    const ForwardTrace tr = forward_trace(net, x);
    const Parameters g = backward(net, tr, Tensor({1}, 1.0f));
    for (std::size_t layer : {0u, 3u, 5u}) {
        auto objective = [&](const Tensor& w) {
            Network probe = net;
            probe.params[layer].weights = w;
            return static_cast<double>(forward(probe, x)[0]);
        };
        CHECK(oracle::relative_error(g[layer].weights,
                                     oracle::numeric_gradient(objective, net.params[layer].weights)) <= 1e-3);
    }
}
