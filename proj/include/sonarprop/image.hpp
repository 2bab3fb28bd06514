#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "sonarprop/tensor.hpp"

namespace sonarprop {

// 8-bit single-channel image, row-major.
struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;

    GrayImage() = default;
    GrayImage(std::size_t w, std::size_t h, std::uint8_t fill = 0) : width(w), height(h), pixels(w * h, fill) {}

    std::uint8_t& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
    std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
    bool empty() const { return pixels.empty(); }
    bool operator==(const GrayImage&) const = default;
};

// Reads binary/ASCII PGM or 8-bit PNG (colour PNGs are converted to luma).
GrayImage read_image(const std::filesystem::path& path);
// Format chosen by extension: .png or .pgm.
void write_image(const std::filesystem::path& path, const GrayImage& image);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);
void write_png(const std::filesystem::path& path, const GrayImage& image);

// 1 x H x W tensor with intensities divided by 255.
Tensor to_tensor(const GrayImage& image);
// 1 x h x w crop normalized to [0, 1]; the window must lie inside the image.
Tensor crop_tensor(const GrayImage& image, std::size_t x, std::size_t y, std::size_t w, std::size_t h);
// Quantizes a 1 x H x W map in [0, 1] as round(v * 255).
GrayImage quantize_map(const Tensor& map);

}  // namespace sonarprop
