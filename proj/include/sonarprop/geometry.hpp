#pragma once

#include <ostream>

namespace sonarprop {

// Axis-aligned box in pixel coordinates covering [x, x + w) x [y, y + h).
struct BoundingBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    long area() const { return static_cast<long>(w) * h; }
    int right() const { return x + w; }
    int bottom() const { return y + h; }
    bool operator==(const BoundingBox&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, const BoundingBox& b) {
    return os << "(" << b.x << "," << b.y << "," << b.w << "," << b.h << ")";
}

// Intersection over union. Throws InvalidInput for boxes with w or h <= 0.
double iou(const BoundingBox& a, const BoundingBox& b);

bool contains(const BoundingBox& outer, const BoundingBox& inner);

}  // namespace sonarprop
