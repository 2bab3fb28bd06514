#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sonarprop/annotations.hpp"
#include "sonarprop/geometry.hpp"
#include "sonarprop/image.hpp"
#include "sonarprop/models.hpp"

namespace sonarprop {

inline constexpr double kObjectnessEpsilon = 0.2;

// Maps the best IoU of a window to its training target: 1 at or above 1 - eps,
// 0 at or below eps, and the IoU itself in between.
double objectness_from_iou(double iou, double eps = kObjectnessEpsilon);

struct LabeledPatch {
    std::vector<std::uint8_t> raw;  // window x window, row-major, 8-bit
    float objectness = 0.0f;
    BoundingBox window;
    std::size_t source_image = 0;

    // 1 x window x window tensor normalized to [0, 1].
    Tensor pixels() const;
};

struct WindowOptions {
    std::size_t window = kPatchSize;
    std::size_t stride = 4;
    std::size_t negatives = 10;
    double epsilon = kObjectnessEpsilon;
    double positive_iou = 0.5;
};

// Every fully contained window on the stride grid with origin (0, 0).
std::vector<BoundingBox> grid_windows(std::size_t width, std::size_t height, std::size_t window,
                                      std::size_t stride);

// Per ground-truth box: the best-IoU grid window plus every window with
// IoU >= 0.5. A window chosen more than once is emitted once with its highest
// objectness. Output is in row-major window order.
std::vector<LabeledPatch> generate_positive_windows(const GrayImage& image, const std::vector<BoundingBox>& boxes,
                                                    const WindowOptions& options = {});

// Uniformly placed windows whose max IoU with every box is <= epsilon, labeled
// 0. Throws SamplingExhausted after 10,000 consecutive rejections.
std::vector<LabeledPatch> sample_negative_windows(const GrayImage& image, const std::vector<BoundingBox>& boxes,
                                                  std::uint64_t seed, const WindowOptions& options = {});

struct PatchDataset {
    std::vector<LabeledPatch> train;
    std::vector<LabeledPatch> validation;
    std::vector<std::size_t> train_images;
    std::vector<std::size_t> validation_images;
};

// Pools patches from every annotated image (pixels must be loaded) and splits
// by image: round(split * n) images go to training.
PatchDataset build_patch_dataset(const std::vector<Annotation>& annotations, double split, std::uint64_t seed,
                                 const WindowOptions& options = {});

}  // namespace sonarprop
