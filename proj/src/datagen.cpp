#include "sonarprop/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <random>

#include "sonarprop/errors.hpp"

namespace sonarprop {

double objectness_from_iou(double iou_value, double eps) {
    if (!(iou_value >= 0.0 && iou_value <= 1.0)) throw InvalidInput("objectness_from_iou: iou outside [0, 1]");
    if (iou_value >= 1.0 - eps) return 1.0;
    if (iou_value <= eps) return 0.0;
    return iou_value;
}

Tensor LabeledPatch::pixels() const {
    const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(raw.size()))));
    Tensor t({1, side, side});
    for (std::size_t i = 0; i < raw.size(); ++i) t[i] = raw[i] / 255.0f;
    return t;
}

std::vector<BoundingBox> grid_windows(std::size_t width, std::size_t height, std::size_t window,
                                      std::size_t stride) {
    if (stride < 1 || window < 1) throw InvalidInput("grid_windows: stride and window must be >= 1");
    std::vector<BoundingBox> out;
    if (width < window || height < window) return out;
    for (std::size_t y = 0; y + window <= height; y += stride)
        for (std::size_t x = 0; x + window <= width; x += stride)
            out.push_back({static_cast<int>(x), static_cast<int>(y), static_cast<int>(window), static_cast<int>(window)});
    return out;
}

namespace {

LabeledPatch make_patch(const GrayImage& image, const BoundingBox& win, float objectness) {
    LabeledPatch p;
    p.window = win;
    p.objectness = objectness;
    p.raw.resize(static_cast<std::size_t>(win.w) * static_cast<std::size_t>(win.h));
    for (int r = 0; r < win.h; ++r) {
        const std::uint8_t* src = image.pixels.data() + static_cast<std::size_t>(win.y + r) * image.width + win.x;
        std::copy(src, src + win.w, p.raw.begin() + static_cast<std::ptrdiff_t>(r) * win.w);
    }
    return p;
}

}  // namespace

std::vector<LabeledPatch> generate_positive_windows(const GrayImage& image, const std::vector<BoundingBox>& boxes,
                                                    const WindowOptions& options) {
    const auto windows = grid_windows(image.width, image.height, options.window, options.stride);
    if (windows.empty()) throw InvalidInput("generate_positive_windows: image smaller than the window");
    // window index -> objectness
    std::map<std::size_t, double> chosen;
    auto choose = [&](std::size_t idx, double value) {
        auto [it, inserted] = chosen.emplace(idx, value);
        if (!inserted) it->second = std::max(it->second, value);
    };
    for (const auto& box : boxes) {
        std::size_t best = 0;
        double best_iou = -1.0;
        for (std::size_t i = 0; i < windows.size(); ++i) {
            const double v = iou(windows[i], box);
            if (v > best_iou) {
                best_iou = v;
                best = i;
            }
            if (v >= options.positive_iou) choose(i, objectness_from_iou(v, options.epsilon));
        }
        choose(best, objectness_from_iou(best_iou, options.epsilon));
    }
    std::vector<LabeledPatch> out;
    out.reserve(chosen.size());
    for (const auto& [idx, value] : chosen) out.push_back(make_patch(image, windows[idx], static_cast<float>(value)));
    return out;
}

std::vector<LabeledPatch> sample_negative_windows(const GrayImage& image, const std::vector<BoundingBox>& boxes,
                                                  std::uint64_t seed, const WindowOptions& options) {
    const std::size_t win = options.window;
    if (image.width < win || image.height < win)
        throw InvalidInput("sample_negative_windows: image smaller than the window");
    constexpr std::size_t kMaxRejections = 10000;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> xs(0, static_cast<int>(image.width - win));
    std::uniform_int_distribution<int> ys(0, static_cast<int>(image.height - win));
    std::vector<LabeledPatch> out;
    std::size_t rejections = 0;
    while (out.size() < options.negatives) {
        const BoundingBox cand{xs(rng), ys(rng), static_cast<int>(win), static_cast<int>(win)};
        double worst = 0.0;
        for (const auto& b : boxes) worst = std::max(worst, iou(cand, b));
        if (worst <= options.epsilon) {
            out.push_back(make_patch(image, cand, 0.0f));
            rejections = 0;
        } else if (++rejections >= kMaxRejections) {
            throw SamplingExhausted("sample_negative_windows: no window with max IoU <= " +
                                    std::to_string(options.epsilon) + " after " + std::to_string(kMaxRejections) +
                                    " attempts");
        }
    }
    return out;
}

PatchDataset build_patch_dataset(const std::vector<Annotation>& annotations, double split, std::uint64_t seed,
                                 const WindowOptions& options) {
    if (annotations.empty()) throw InvalidInput("build_patch_dataset: no annotated images");
    if (!(split >= 0.0 && split <= 1.0)) throw InvalidInput("build_patch_dataset: split outside [0, 1]");
    for (const auto& a : annotations)
        if (a.image.empty()) throw InvalidInput("build_patch_dataset: image pixels not loaded for " + a.file);

    std::vector<std::size_t> order(annotations.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::lround(split * static_cast<double>(order.size())));

    std::vector<std::vector<LabeledPatch>> per_image(annotations.size());
    std::vector<std::exception_ptr> errors(annotations.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(annotations.size()); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        try {
            const Annotation& a = annotations[i];
            auto patches = generate_positive_windows(a.image, a.boxes, options);
            auto negatives = sample_negative_windows(a.image, a.boxes, seed * 1000003ULL + i + 1, options);
            patches.insert(patches.end(), std::make_move_iterator(negatives.begin()),
                           std::make_move_iterator(negatives.end()));
            for (auto& p : patches) p.source_image = i;
            per_image[i] = std::move(patches);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    PatchDataset ds;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const std::size_t img = order[rank];
        const bool train = rank < n_train;
        (train ? ds.train_images : ds.validation_images).push_back(img);
        auto& dst = train ? ds.train : ds.validation;
        dst.insert(dst.end(), per_image[img].begin(), per_image[img].end());
    }
    std::sort(ds.train_images.begin(), ds.train_images.end());
    std::sort(ds.validation_images.begin(), ds.validation_images.end());
    return ds;
}

}  // namespace sonarprop
