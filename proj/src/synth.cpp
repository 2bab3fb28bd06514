#include "sonarprop/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "sonarprop/errors.hpp"

namespace sonarprop {

bool SonarFan::contains(double x, double y) const {
    const double dx = x - apex_x, dy = apex_y - y;
    const double r = std::hypot(dx, dy);
    if (r < min_range || r > max_range) return false;
    return std::abs(std::atan2(dx, dy)) <= half_angle;
}

namespace {

struct Blob {
    BoundingBox box;              // tight bounds of mask pixels
    std::vector<std::uint8_t> mask;  // over `frame`
    BoundingBox frame;
    double level = 0.0;
    double shadow_length = 0.0;
    double shadow_gain = 0.0;

    bool covers(int x, int y) const {
        if (x < frame.x || y < frame.y || x >= frame.right() || y >= frame.bottom()) return false;
        return mask[static_cast<std::size_t>(y - frame.y) * static_cast<std::size_t>(frame.w) + static_cast<std::size_t>(x - frame.x)] != 0;
    }
};

bool box_in_fan(const SonarFan& fan, const BoundingBox& b) {
    for (int x = b.x; x < b.right(); ++x)
        if (!fan.contains(x + 0.5, b.y + 0.5) || !fan.contains(x + 0.5, b.bottom() - 0.5)) return false;
    for (int y = b.y; y < b.bottom(); ++y)
        if (!fan.contains(b.x + 0.5, y + 0.5) || !fan.contains(b.right() - 0.5, y + 0.5)) return false;
    return true;
}

// Rasterizes an ellipse or a random convex polygon inside `frame`.
std::vector<std::uint8_t> blob_mask(const BoundingBox& frame, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(frame.w) * static_cast<std::size_t>(frame.h), 0);
    const double cx = frame.w / 2.0, cy = frame.h / 2.0;
    const double rx = frame.w / 2.0, ry = frame.h / 2.0;
    if (unit(rng) < 0.5) {
        for (int y = 0; y < frame.h; ++y)
            for (int x = 0; x < frame.w; ++x) {
                const double u = (x + 0.5 - cx) / rx, v = (y + 0.5 - cy) / ry;
                if (u * u + v * v <= 1.0) mask[static_cast<std::size_t>(y * frame.w + x)] = 1;
            }
        return mask;
    }
    const int vertices = 5 + static_cast<int>(unit(rng) * 4.0);
    std::vector<double> angles(static_cast<std::size_t>(vertices));
    const double phase = unit(rng) * 2.0 * std::numbers::pi;
    for (int i = 0; i < vertices; ++i)
        angles[static_cast<std::size_t>(i)] = phase + 2.0 * std::numbers::pi * (i + 0.35 * (unit(rng) - 0.5)) / vertices;
    std::vector<std::pair<double, double>> pts;
    for (double a : angles) {
        const double s = 0.8 + 0.2 * unit(rng);
        pts.emplace_back(cx + s * rx * std::cos(a), cy + s * ry * std::sin(a));
    }
    for (int y = 0; y < frame.h; ++y)
        for (int x = 0; x < frame.w; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            bool inside = true;
            for (std::size_t i = 0; i < pts.size() && inside; ++i) {
                const auto& [ax, ay] = pts[i];
                const auto& [bx, by] = pts[(i + 1) % pts.size()];
                inside = (bx - ax) * (py - ay) - (by - ay) * (px - ax) >= 0.0;
            }
            if (inside) mask[static_cast<std::size_t>(y * frame.w + x)] = 1;
        }
    return mask;
}

BoundingBox tight_bounds(const Blob& blob) {
    int x0 = blob.frame.right(), y0 = blob.frame.bottom(), x1 = blob.frame.x - 1, y1 = blob.frame.y - 1;
    for (int y = blob.frame.y; y < blob.frame.bottom(); ++y)
        for (int x = blob.frame.x; x < blob.frame.right(); ++x)
            if (blob.covers(x, y)) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
    if (x1 < x0) return {};
    return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

}  // namespace

SynthResult synth_sonar_image(std::size_t width, std::size_t height, std::size_t object_count,
                              std::uint64_t seed, const SynthOptions& options) {
    if (width < 192 || height < 192) throw InvalidInput("synth_sonar_image: extents must be >= 192");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double W = static_cast<double>(width), H = static_cast<double>(height);

    SynthResult result;
    result.requested_objects = object_count;
    SonarFan& fan = result.fan;
    fan.apex_x = W / 2.0;
    fan.apex_y = 1.25 * H;
    fan.max_range = fan.apex_y - 0.02 * H;
    fan.min_range = fan.apex_y - 0.97 * H;
    fan.half_angle = std::min(std::asin(std::min(1.0, 0.48 * W / fan.max_range)), 0.75);

    // Object placement.
    std::vector<Blob> blobs;
    const int max_extent = static_cast<int>(std::min<std::size_t>(options.max_object_extent, std::min(width, height) - 8));
    const int min_extent = std::min(static_cast<int>(options.min_object_extent), max_extent);
    std::uniform_int_distribution<int> extent(min_extent, max_extent);
    for (std::size_t o = 0; o < object_count; ++o) {
        bool placed = false;
        for (std::size_t attempt = 0; attempt < options.placement_attempts && !placed; ++attempt) {
            const int w = extent(rng), h = extent(rng);
            std::uniform_int_distribution<int> px(0, static_cast<int>(width) - w);
            std::uniform_int_distribution<int> py(0, static_cast<int>(height) - h);
            Blob blob;
            blob.frame = {px(rng), py(rng), w, h};
            if (!box_in_fan(fan, blob.frame)) continue;
            bool clear = true;
            for (const auto& other : blobs) {
                const BoundingBox grown{other.frame.x - 8, other.frame.y - 8, other.frame.w + 16, other.frame.h + 16};
                if (iou(grown, blob.frame) > 0.0) clear = false;
            }
            if (!clear) continue;
            blob.mask = blob_mask(blob.frame, rng);
            blob.box = tight_bounds(blob);
            if (blob.box.w < min_extent / 2 || blob.box.h < min_extent / 2) continue;
            blob.level = 0.55 + 0.35 * unit(rng);
            blob.shadow_length = (0.6 + 0.8 * unit(rng)) * blob.box.h;
            blob.shadow_gain = 0.1 + 0.15 * unit(rng);
            blobs.push_back(std::move(blob));
            placed = true;
        }
        if (!placed) result.reduced = true;
    }

    // Weak unannotated clutter.
    struct Spot {
        double x, y, r, level;
    };
    std::vector<Spot> clutter;
    const int n_clutter = static_cast<int>(unit(rng) * 4.0);
    for (int i = 0; i < n_clutter; ++i) {
        const double x = unit(rng) * W, y = unit(rng) * H;
        if (!fan.contains(x, y)) continue;
        clutter.push_back({x, y, 4.0 + 8.0 * unit(rng), 0.28 + 0.12 * unit(rng)});
    }

    // Angular shadow tables: furthest range of each blob per angle bin.
    const double dphi = 0.5 / fan.max_range;
    const auto bins = static_cast<std::size_t>(2.0 * fan.half_angle / dphi) + 2;
    auto bin_of = [&](double x, double y, double& range) {
        const double dx = x - fan.apex_x, dy = fan.apex_y - y;
        range = std::hypot(dx, dy);
        const double phi = std::atan2(dx, dy) + fan.half_angle;
        return static_cast<std::size_t>(std::clamp(phi / dphi, 0.0, static_cast<double>(bins - 1)));
    };
    std::vector<std::vector<double>> far_range(blobs.size(), std::vector<double>(bins, -1.0));
    for (std::size_t b = 0; b < blobs.size(); ++b)
        for (int y = blobs[b].box.y; y < blobs[b].box.bottom(); ++y)
            for (int x = blobs[b].box.x; x < blobs[b].box.right(); ++x) {
                if (!blobs[b].covers(x, y)) continue;
                double r;
                const std::size_t bin = bin_of(x + 0.5, y + 0.5, r);
                far_range[b][bin] = std::max(far_range[b][bin], r);
            }

    // Low-frequency seabed texture.
    struct Wave {
        double kx, ky, phase, amp;
    };
    std::vector<Wave> waves;
    for (int i = 0; i < 4; ++i)
        waves.push_back({(unit(rng) - 0.5) * 0.06, (unit(rng) - 0.5) * 0.06, unit(rng) * 6.28, 0.5 + 0.5 * unit(rng)});

    std::gamma_distribution<double> speckle(options.speckle_looks, 1.0 / options.speckle_looks);
    GrayImage& img = result.image;
    img = GrayImage(width, height);
    for (std::size_t yy = 0; yy < height; ++yy) {
        for (std::size_t xx = 0; xx < width; ++xx) {
            const double x = xx + 0.5, y = yy + 0.5;
            const int ix = static_cast<int>(xx), iy = static_cast<int>(yy);
            if (!fan.contains(x, y)) {
                img.at(xx, yy) = 0;
                continue;
            }
            double range;
            const std::size_t bin = bin_of(x, y, range);
            double texture = 0.0, norm = 0.0;
            for (const auto& w : waves) {
                texture += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
                norm += w.amp;
            }
            const double gain = 1.1 - 0.3 * (range - fan.min_range) / (fan.max_range - fan.min_range);
            double v = options.background_level * gain * (1.0 + 0.25 * texture / norm);
            for (const auto& s : clutter)
                if (std::hypot(x - s.x, y - s.y) <= s.r) v = std::max(v, s.level);
            for (std::size_t b = 0; b < blobs.size(); ++b) {
                const double fr = far_range[b][bin];
                if (fr > 0.0 && range > fr && range < fr + blobs[b].shadow_length) v *= blobs[b].shadow_gain;
            }
            for (const auto& blob : blobs) {
                if (!blob.covers(ix, iy)) continue;
                // Sensor-facing rim is brighter.
                const bool rim = !blob.covers(ix, iy + 3);
                v = blob.level * (rim ? 1.2 : 1.0);
            }
            v *= speckle(rng);
            img.at(xx, yy) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
        }
    }

    result.annotation.width = width;
    result.annotation.height = height;
    for (const auto& blob : blobs) result.annotation.boxes.push_back(blob.box);
    result.annotation.image = img;
    return result;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::vector<Annotation> synth_dataset(std::size_t count, std::size_t width, std::size_t height, std::uint64_t seed,
                                      std::size_t min_objects, std::size_t max_objects,
                                      const SynthOptions& options) {
    if (min_objects > max_objects) throw InvalidInput("synth_dataset: min_objects exceeds max_objects");
    if (width < 192 || height < 192) throw InvalidInput("synth_dataset: extents must be >= 192");
    std::vector<Annotation> out(count);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(count); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const std::uint64_t s = splitmix64(splitmix64(seed) ^ i);
        const std::size_t objects = min_objects + static_cast<std::size_t>(s % (max_objects - min_objects + 1));
        SynthResult r = synth_sonar_image(width, height, objects, s, options);
        char name[32];
        std::snprintf(name, sizeof name, "img_%04zu.png", i);
        r.annotation.file = name;
        out[i] = std::move(r.annotation);
    }
    return out;
}

}  // namespace sonarprop
