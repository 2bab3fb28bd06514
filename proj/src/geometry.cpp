#include "sonarprop/geometry.hpp"

#include <algorithm>

#include "sonarprop/errors.hpp"

namespace sonarprop {

double iou(const BoundingBox& a, const BoundingBox& b) {
    if (a.w <= 0 || a.h <= 0 || b.w <= 0 || b.h <= 0) throw InvalidInput("iou: degenerate box");
    const long iw = std::max(0, std::min(a.right(), b.right()) - std::max(a.x, b.x));
    const long ih = std::max(0, std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y));
    const long inter = iw * ih;
    if (inter == 0) return 0.0;
    const long uni = a.area() + b.area() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

bool contains(const BoundingBox& outer, const BoundingBox& inner) {
    return inner.x >= outer.x && inner.y >= outer.y && inner.right() <= outer.right() &&
           inner.bottom() <= outer.bottom();
}

}  // namespace sonarprop
