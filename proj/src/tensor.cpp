#include "sonarprop/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "sonarprop/errors.hpp"

namespace sonarprop {

std::size_t element_count(const std::vector<std::size_t>& shape) {
    if (shape.empty()) return 0;
    std::size_t n = 1;
    for (auto extent : shape) n *= extent;
    return n;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

namespace {

void validate_shape(const std::vector<std::size_t>& shape) {
    if (shape.size() > 4) throw InvalidInput("tensor rank above 4: " + shape_string(shape));
    for (auto extent : shape)
        if (extent == 0) throw InvalidInput("tensor extent must be positive: " + shape_string(shape));
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, float fill) : shape_(std::move(shape)) {
    validate_shape(shape_);
    data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape(shape_);
    if (data_.size() != element_count(shape_))
        throw InvalidInput("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_string(shape_));
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
    return Tensor(std::move(shape), data_);
}

void Tensor::fill(float value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

}  // namespace sonarprop
