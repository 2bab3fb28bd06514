#pragma once

// Layer kernels used by both network architectures. The convolution, pooling
// and matrix paths are OpenMP-parallel; each output element is still produced
// by exactly one thread in a fixed summation order, so results do not depend on
// the thread count. Serial nested-loop counterparts live in reference.hpp.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sonarprop/tensor.hpp"

namespace sonarprop {

enum class Padding { valid, same };

struct ConvSpec {
    std::size_t out_channels = 1;
    std::size_t kernel_h = 1;
    std::size_t kernel_w = 1;
    Padding padding = Padding::valid;
    std::size_t stride = 1;  // only 1 is supported

    bool operator==(const ConvSpec&) const = default;
};

struct ConvGrads {
    Tensor input;  // empty when not requested
    Tensor weights;
    Tensor bias;
};

struct PoolResult {
    Tensor output;
    std::vector<std::uint32_t> argmax;  // flat input index per output cell
};

struct DenseGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};

struct LossResult {
    float value = 0.0f;
    Tensor gradient;
};

// Output extent of a convolution along one axis.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, Padding padding);

// input C x H x W, weights O x C x kh x kw, bias O.
Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      const ConvSpec& spec);
ConvGrads conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                          const ConvSpec& spec, bool need_input_grad = true);

// Non-overlapping size x size pooling; bottom/right remainder is cropped.
// Ties go to the first element in row-major order.
PoolResult maxpool2d(const Tensor& input, std::size_t size);
Tensor maxpool2d_backward(const std::vector<std::size_t>& input_shape,
                          std::span<const std::uint32_t> argmax, const Tensor& grad_out);

// input is read as a flat vector of N elements; weights M x N; bias M.
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);
DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out);

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);
Tensor sigmoid(const Tensor& x);
// Takes the forward output y = sigmoid(x).
Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out);

// Corner-aligned bilinear interpolation of a 1 x h x w map.
Tensor bilinear_resize(const Tensor& input, std::size_t target_h, std::size_t target_w);

// Zero-mean normalized cross-correlation of two equally sized patches.
// Returns 0 if either patch has zero variance.
float xcorr2d_normalized(const Tensor& image, const Tensor& templ);

LossResult mse_loss(const Tensor& pred, const Tensor& target);

namespace detail {

// C[M x N] (+)= A[M x K] * B[K x N], row-major with leading dimensions.
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
             const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate);

// C[M x N] += A[M x K] * B[N x K]^T.
void gemm_nt_accumulate(std::size_t m, std::size_t n, std::size_t k, const float* a,
                        std::size_t lda, const float* b, std::size_t ldb, float* c,
                        std::size_t ldc);

}  // namespace detail

}  // namespace sonarprop
