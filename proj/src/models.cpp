#include "sonarprop/models.hpp"

#include <cmath>
#include <random>

#include "sonarprop/errors.hpp"

namespace sonarprop {

std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::conv: return "conv";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::dense: return "dense";
        case LayerKind::relu: return "relu";
        case LayerKind::sigmoid: return "sigmoid";
    }
    return "unknown";
}

LayerSpec LayerSpec::convolution(std::size_t out_channels, std::size_t kernel, Padding padding) {
    LayerSpec l;
    l.kind = LayerKind::conv;
    l.conv = ConvSpec{out_channels, kernel, kernel, padding, 1};
    return l;
}

LayerSpec LayerSpec::max_pool(std::size_t size) {
    LayerSpec l;
    l.kind = LayerKind::maxpool;
    l.pool = size;
    return l;
}

LayerSpec LayerSpec::fully_connected(std::size_t units) {
    LayerSpec l;
    l.kind = LayerKind::dense;
    l.units = units;
    return l;
}

LayerSpec LayerSpec::relu_activation() { return LayerSpec{}; }

LayerSpec LayerSpec::sigmoid_activation() {
    LayerSpec l;
    l.kind = LayerKind::sigmoid;
    return l;
}

std::vector<std::vector<std::size_t>> layer_shapes(const NetworkSpec& spec,
                                                   const std::vector<std::size_t>& input_shape) {
    std::vector<std::vector<std::size_t>> shapes;
    std::vector<std::size_t> cur = input_shape;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        const std::string where = "layer " + std::to_string(i) + " (" + to_string(l.kind) + ")";
        switch (l.kind) {
            case LayerKind::conv: {
                if (cur.size() != 3) throw InvalidInput(where + ": convolution needs a C x H x W input");
                const std::size_t h = conv_output_extent(cur[1], l.conv.kernel_h, l.conv.padding);
                const std::size_t w = conv_output_extent(cur[2], l.conv.kernel_w, l.conv.padding);
                if (h == 0 || w == 0) throw InvalidInput(where + ": input " + shape_string(cur) + " too small");
                cur = {l.conv.out_channels, h, w};
                break;
            }
            case LayerKind::maxpool: {
                if (cur.size() != 3 || l.pool < 1 || cur[1] < l.pool || cur[2] < l.pool)
                    throw InvalidInput(where + ": cannot pool " + shape_string(cur));
                cur = {cur[0], cur[1] / l.pool, cur[2] / l.pool};
                break;
            }
            case LayerKind::dense:
                if (l.units == 0) throw InvalidInput(where + ": dense layer needs units");
                cur = {l.units};
                break;
            case LayerKind::relu:
            case LayerKind::sigmoid:
                break;
        }
        shapes.push_back(cur);
    }
    return shapes;
}

std::size_t param_count(const NetworkSpec& spec) {
    if (spec.layers.empty()) return 0;
    const auto shapes = layer_shapes(spec, spec.input_shape());
    std::size_t total = 0;
    std::vector<std::size_t> in = spec.input_shape();
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        if (l.kind == LayerKind::conv)
            total += l.conv.out_channels * in[0] * l.conv.kernel_h * l.conv.kernel_w + l.conv.out_channels;
        else if (l.kind == LayerKind::dense)
            total += l.units * element_count(in) + l.units;
        in = shapes[i];
    }
    return total;
}

std::size_t param_count(const Parameters& params) {
    std::size_t total = 0;
    for (const auto& p : params) total += p.weights.size() + p.bias.size();
    return total;
}

Parameters init_parameters(const NetworkSpec& spec, std::uint64_t seed) {
    const auto shapes = layer_shapes(spec, spec.input_shape());
    std::mt19937_64 rng(seed);
    Parameters params(spec.layers.size());
    std::vector<std::size_t> in = spec.input_shape();
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        std::size_t fan_in = 0, fan_out = 0;
        if (l.kind == LayerKind::conv) {
            const std::size_t area = l.conv.kernel_h * l.conv.kernel_w;
            params[i].weights = Tensor({l.conv.out_channels, in[0], l.conv.kernel_h, l.conv.kernel_w});
            params[i].bias = Tensor({l.conv.out_channels});
            fan_in = in[0] * area;
            fan_out = l.conv.out_channels * area;
        } else if (l.kind == LayerKind::dense) {
            params[i].weights = Tensor({l.units, element_count(in)});
            params[i].bias = Tensor({l.units});
            fan_in = element_count(in);
            fan_out = l.units;
        }
        if (l.trainable()) {
            const float limit = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
            std::uniform_real_distribution<float> dist(-limit, limit);
            for (float& v : params[i].weights.values()) v = dist(rng);
        }
        in = shapes[i];
    }
    return params;
}

Network build_cnn(std::uint64_t seed, Padding padding) {
    NetworkSpec spec;
    spec.layers = {
        LayerSpec::convolution(32, 5, padding), LayerSpec::relu_activation(), LayerSpec::max_pool(2),
        LayerSpec::convolution(32, 5, padding), LayerSpec::relu_activation(), LayerSpec::max_pool(2),
        LayerSpec::fully_connected(96),         LayerSpec::relu_activation(),
        LayerSpec::fully_connected(1),          LayerSpec::sigmoid_activation(),
    };
    return Network{spec, init_parameters(spec, seed)};
}

Network build_fcn_tiny(std::uint64_t seed, Padding padding) {
    NetworkSpec spec;
    spec.layers = {
        LayerSpec::convolution(24, 3, padding), LayerSpec::relu_activation(),
        LayerSpec::convolution(24, 1, padding), LayerSpec::relu_activation(),
        LayerSpec::max_pool(2),
        LayerSpec::convolution(24, 3, padding), LayerSpec::relu_activation(),
        LayerSpec::convolution(24, 1, padding), LayerSpec::relu_activation(),
        LayerSpec::max_pool(2),
        LayerSpec::fully_connected(1),          LayerSpec::sigmoid_activation(),
    };
    return Network{spec, init_parameters(spec, seed)};
}

bool is_fully_convolutional(const NetworkSpec& spec) {
    for (const auto& l : spec.layers)
        if (l.kind == LayerKind::dense) return false;
    return true;
}

Network fc_to_conv(const Network& net) {
    const auto& layers = net.spec.layers;
    std::ptrdiff_t last = -1;
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (layers[i].trainable()) last = static_cast<std::ptrdiff_t>(i);
    if (last < 0 || layers[static_cast<std::size_t>(last)].kind != LayerKind::dense)
        throw InvalidInput("fc_to_conv: final trainable layer is not dense");
    for (std::ptrdiff_t i = 0; i < last; ++i)
        if (layers[static_cast<std::size_t>(i)].kind == LayerKind::dense)
            throw InvalidInput("fc_to_conv: only the final dense layer can be converted");

    const auto shapes = layer_shapes(net.spec, net.spec.input_shape());
    const std::vector<std::size_t> feature =
        last == 0 ? net.spec.input_shape() : shapes[static_cast<std::size_t>(last - 1)];
    if (feature.size() != 3) throw InvalidInput("fc_to_conv: dense input is not a C x h x w feature map");

    const std::size_t idx = static_cast<std::size_t>(last);
    const std::size_t units = layers[idx].units;
    Network out = net;
    out.spec.layers[idx] = LayerSpec{};
    out.spec.layers[idx].kind = LayerKind::conv;
    out.spec.layers[idx].conv = ConvSpec{units, feature[1], feature[2], Padding::valid, 1};
    out.params[idx].weights = net.params[idx].weights.reshaped({units, feature[0], feature[1], feature[2]});
    return out;
}

namespace {

void check_params(const Network& net) {
    if (net.params.size() != net.spec.layers.size())
        throw InvalidInput("network parameters do not match layer count");
}

}  // namespace

ForwardTrace forward_trace(const Network& net, const Tensor& input) {
    check_params(net);
    ForwardTrace trace;
    trace.inputs.reserve(net.spec.layers.size());
    trace.argmax.resize(net.spec.layers.size());
    Tensor cur = input;
    for (std::size_t i = 0; i < net.spec.layers.size(); ++i) {
        const LayerSpec& l = net.spec.layers[i];
        const LayerParams& p = net.params[i];
        Tensor next;
        switch (l.kind) {
            case LayerKind::conv: next = conv2d_forward(cur, p.weights, p.bias, l.conv); break;
            case LayerKind::maxpool: {
                PoolResult r = maxpool2d(cur, l.pool);
                next = std::move(r.output);
                trace.argmax[i] = std::move(r.argmax);
                break;
            }
            case LayerKind::dense: next = dense_forward(cur, p.weights, p.bias); break;
            case LayerKind::relu: next = relu(cur); break;
            case LayerKind::sigmoid: next = sigmoid(cur); break;
        }
        trace.inputs.push_back(std::move(cur));
        cur = std::move(next);
    }
    trace.output = std::move(cur);
    return trace;
}

Tensor forward(const Network& net, const Tensor& input) {
    check_params(net);
    Tensor cur = input;
    for (std::size_t i = 0; i < net.spec.layers.size(); ++i) {
        const LayerSpec& l = net.spec.layers[i];
        const LayerParams& p = net.params[i];
        switch (l.kind) {
            case LayerKind::conv: cur = conv2d_forward(cur, p.weights, p.bias, l.conv); break;
            case LayerKind::maxpool: cur = maxpool2d(cur, l.pool).output; break;
            case LayerKind::dense: cur = dense_forward(cur, p.weights, p.bias); break;
            case LayerKind::relu: cur = relu(cur); break;
            case LayerKind::sigmoid: cur = sigmoid(cur); break;
        }
    }
    return cur;
}

float forward_patch(const Network& net, const Tensor& patch) {
    if (patch.rank() != 3 || patch.dim(0) != 1 || patch.dim(1) != kPatchSize || patch.dim(2) != kPatchSize)
        throw InvalidInput("forward_patch: expected a 1x96x96 patch, got " + shape_string(patch.shape()));
    const Tensor out = forward(net, patch);
    if (out.size() != 1) throw InvalidInput("forward_patch: network does not produce a scalar for a patch");
    return out[0];
}

Parameters backward(const Network& net, const ForwardTrace& trace, const Tensor& grad_output) {
    check_params(net);
    const std::size_t n = net.spec.layers.size();
    if (trace.inputs.size() != n) throw InvalidInput("backward: trace does not match network");
    Parameters grads(n);
    Tensor g = grad_output;
    for (std::size_t ii = n; ii-- > 0;) {
        const LayerSpec& l = net.spec.layers[ii];
        const Tensor& in = trace.inputs[ii];
        const bool need_input = ii > 0;
        switch (l.kind) {
            case LayerKind::conv: {
                ConvGrads cg = conv2d_backward(in, net.params[ii].weights, g, l.conv, need_input);
                grads[ii].weights = std::move(cg.weights);
                grads[ii].bias = std::move(cg.bias);
                g = std::move(cg.input);
                break;
            }
            case LayerKind::maxpool: g = maxpool2d_backward(in.shape(), trace.argmax[ii], g); break;
            case LayerKind::dense: {
                DenseGrads dg = dense_backward(in, net.params[ii].weights, g);
                grads[ii].weights = std::move(dg.weights);
                grads[ii].bias = std::move(dg.bias);
                g = std::move(dg.input);
                break;
            }
            case LayerKind::relu: g = relu_backward(in, g); break;
            case LayerKind::sigmoid: {
                const Tensor& y = ii + 1 < n ? trace.inputs[ii + 1] : trace.output;
                g = sigmoid_backward(y, g);
                break;
            }
        }
    }
    return grads;
}

}  // namespace sonarprop
