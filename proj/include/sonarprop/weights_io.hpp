#pragma once

// SPNW1 container. Layout, all integers uint32 little-endian, floats IEEE-754
// binary32 little-endian:
//
//   "SPNW1"                  5-byte magic
//   layer_count
//   per layer:
//     kind                   0 conv, 1 maxpool, 2 dense, 3 relu, 4 sigmoid, 5 templates
//     attr_count, attrs...   conv: out_channels kernel_h kernel_w padding(0 valid, 1 same)
//                            maxpool: size; dense: units; others: none
//     weight_rank, extents...
//     bias_rank, extents...
//     weight values, then bias values
//
// Dense weights are M x N with N flattened channel-major, row-major (C, H, W),
// the same order fc_to_conv uses for its M x C x h x w kernel.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sonarprop/models.hpp"

namespace sonarprop {

inline constexpr std::uint32_t kTemplatesKind = 5;

struct WeightRecord {
    std::uint32_t kind = 0;
    std::vector<std::uint32_t> attrs;
    Tensor weights;
    Tensor bias;
};

void write_records(const std::filesystem::path& path, const std::vector<WeightRecord>& records);
std::vector<WeightRecord> read_records(const std::filesystem::path& path);

void save_network(const std::filesystem::path& path, const Network& net);
Network load_network(const std::filesystem::path& path);

}  // namespace sonarprop
