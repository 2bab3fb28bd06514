#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sonarprop/kernels.hpp"
#include "sonarprop/tensor.hpp"

namespace sonarprop {

inline constexpr std::size_t kPatchSize = 96;

enum class LayerKind : std::uint32_t { conv = 0, maxpool = 1, dense = 2, relu = 3, sigmoid = 4 };

std::string to_string(LayerKind kind);

struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    ConvSpec conv{};         // kind == conv
    std::size_t pool = 0;    // kind == maxpool
    std::size_t units = 0;   // kind == dense

    static LayerSpec convolution(std::size_t out_channels, std::size_t kernel, Padding padding);
    static LayerSpec max_pool(std::size_t size);
    static LayerSpec fully_connected(std::size_t units);
    static LayerSpec relu_activation();
    static LayerSpec sigmoid_activation();

    bool trainable() const { return kind == LayerKind::conv || kind == LayerKind::dense; }
    bool operator==(const LayerSpec&) const = default;
};

struct NetworkSpec {
    std::vector<LayerSpec> layers;
    // Reference input extent used to size dense layers.
    std::size_t input_channels = 1;
    std::size_t input_height = kPatchSize;
    std::size_t input_width = kPatchSize;

    std::vector<std::size_t> input_shape() const { return {input_channels, input_height, input_width}; }
    bool operator==(const NetworkSpec&) const = default;
};

// Weight and bias per layer, in layer order; both empty for parameter-free layers.
struct LayerParams {
    Tensor weights;
    Tensor bias;
    bool operator==(const LayerParams&) const = default;
};
using Parameters = std::vector<LayerParams>;

struct Network {
    NetworkSpec spec;
    Parameters params;
};

// Shapes of every layer's output for the given input shape; element i is the
// output of layer i. Throws InvalidInput when the stack is inconsistent.
std::vector<std::vector<std::size_t>> layer_shapes(const NetworkSpec& spec,
                                                   const std::vector<std::size_t>& input_shape);

std::size_t param_count(const NetworkSpec& spec);
std::size_t param_count(const Parameters& params);

// Uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases.
Parameters init_parameters(const NetworkSpec& spec, std::uint64_t seed);

// LeNet-style patch classifier: two conv/pool stacks, FC(96), FC(1).
Network build_cnn(std::uint64_t seed = 1, Padding padding = Padding::valid);
// Tiny-module network: (3x3, 1x1) conv pairs with 24 channels, two pools, FC(1).
Network build_fcn_tiny(std::uint64_t seed = 1, Padding padding = Padding::same);

// Replaces the final dense layer (which must read a C x h x w feature map)
// with an equivalent valid h x w convolution. The dense weights are reused in
// their channel-major, row-major flattening order.
Network fc_to_conv(const Network& net);

bool is_fully_convolutional(const NetworkSpec& spec);

Tensor forward(const Network& net, const Tensor& input);

// Objectness of a single 1 x 96 x 96 patch.
float forward_patch(const Network& net, const Tensor& patch);

struct ForwardTrace {
    std::vector<Tensor> inputs;                       // input of each layer
    std::vector<std::vector<std::uint32_t>> argmax;   // non-empty for pool layers
    Tensor output;
};

ForwardTrace forward_trace(const Network& net, const Tensor& input);

// Parameter gradients of <grad_output, output> for the traced forward pass.
Parameters backward(const Network& net, const ForwardTrace& trace, const Tensor& grad_output);

}  // namespace sonarprop
