#pragma once

// Serial nested-loop versions of the layer kernels. They share no code with
// kernels.cpp and exist so tests and benchmarks have an independent baseline.

#include "sonarprop/kernels.hpp"

namespace sonarprop::reference {

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      const ConvSpec& spec);
ConvGrads conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                          const ConvSpec& spec);
Tensor maxpool2d(const Tensor& input, std::size_t size);
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);
Tensor bilinear_resize(const Tensor& input, std::size_t target_h, std::size_t target_w);
double pearson(const Tensor& a, const Tensor& b);

}  // namespace sonarprop::reference
