#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sonarprop/annotations.hpp"
#include "sonarprop/image.hpp"

namespace sonarprop {

// Fan-shaped insonified sector with the sensor below the bottom edge.
struct SonarFan {
    double apex_x = 0.0;
    double apex_y = 0.0;
    double min_range = 0.0;
    double max_range = 0.0;
    double half_angle = 0.0;  // radians, measured from the vertical

    bool contains(double x, double y) const;
};

struct SynthOptions {
    std::size_t min_object_extent = 72;
    std::size_t max_object_extent = 116;
    double background_level = 0.16;
    double speckle_looks = 4.0;   // gamma shape of the multiplicative speckle
    std::size_t placement_attempts = 400;
};

struct SynthResult {
    GrayImage image;
    Annotation annotation;
    SonarFan fan;
    std::size_t requested_objects = 0;
    bool reduced = false;  // fewer objects than requested could be placed
};

// Deterministic per seed. Objects are bright blobs (ellipses or convex
// polygons) with an acoustic shadow extending away from the sensor; returned
// boxes are the tight bounds of the blob pixels.
SynthResult synth_sonar_image(std::size_t width, std::size_t height, std::size_t object_count,
                              std::uint64_t seed, const SynthOptions& options = {});

// `count` images named img_0000.png, ... with pixels loaded. Image i uses a
// seed derived from (seed, i) and between min_objects and max_objects objects.
std::vector<Annotation> synth_dataset(std::size_t count, std::size_t width, std::size_t height, std::uint64_t seed,
                                      std::size_t min_objects = 1, std::size_t max_objects = 3,
                                      const SynthOptions& options = {});

}  // namespace sonarprop
