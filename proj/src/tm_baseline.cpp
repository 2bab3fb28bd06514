#include "sonarprop/tm_baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sonarprop/errors.hpp"
#include "sonarprop/kernels.hpp"
#include "sonarprop/weights_io.hpp"

namespace sonarprop {

namespace {

constexpr std::size_t kTemplateLen = kPatchSize * kPatchSize;

void append_normalized(std::vector<float>& rows, const Tensor& t) {
    double mean = 0.0;
    for (float v : t.values()) mean += v;
    mean /= static_cast<double>(t.size());
    double norm = 0.0;
    for (float v : t.values()) norm += (v - mean) * (v - mean);
    norm = std::sqrt(norm);
    for (float v : t.values()) rows.push_back(norm > 0.0 ? static_cast<float>((v - mean) / norm) : 0.0f);
}

}  // namespace

TemplateBank::TemplateBank(std::vector<Tensor> templates) {
    for (auto& t : templates) add(std::move(t));
}

void TemplateBank::add(Tensor templ) {
    if (templ.rank() != 3 || templ.dim(0) != 1 || templ.dim(1) != kPatchSize || templ.dim(2) != kPatchSize)
        throw InvalidInput("TemplateBank: templates must be 1 x 96 x 96");
    append_normalized(normalized_, templ);
    templates_.push_back(std::move(templ));
}

TemplateBank select_templates(const std::vector<LabeledPatch>& train_set, std::size_t count, std::uint64_t seed) {
    if (count < 1) throw InvalidInput("select_templates: need at least one template");
    std::vector<std::size_t> positives;
    for (std::size_t i = 0; i < train_set.size(); ++i)
        if (train_set[i].objectness > 0.0f) positives.push_back(i);
    if (positives.size() < count)
        throw InvalidInput("select_templates: " + std::to_string(positives.size()) + " positive patches, " +
                           std::to_string(count) + " requested");
    std::mt19937_64 rng(seed);
    std::shuffle(positives.begin(), positives.end(), rng);
    TemplateBank bank;
    for (std::size_t i = 0; i < count; ++i) bank.add(train_set[positives[i]].pixels());
    return bank;
}

float tm_objectness(const TemplateBank& bank, const Tensor& patch) {
    if (bank.empty()) throw InvalidInput("tm_objectness: empty template bank");
    float best = 0.0f;
    for (const auto& t : bank.templates()) best = std::max(best, xcorr2d_normalized(patch, t));
    return best;
}

ObjectnessMap objectness_map_tm(const TemplateBank& bank, const GrayImage& image, std::size_t stride) {
    if (bank.empty()) throw InvalidInput("objectness_map_tm: empty template bank");
    if (image.width < kPatchSize || image.height < kPatchSize)
        throw InvalidInput("objectness_map_tm: image smaller than 96 x 96");
    if (stride < 1) throw InvalidInput("objectness_map_tm: stride must be >= 1");
    const std::size_t rows = (image.height - kPatchSize) / stride + 1;
    const std::size_t cols = (image.width - kPatchSize) / stride + 1;
    const std::size_t w = image.width;

    // Integral images of v and v^2 with v = pixel / 255.
    std::vector<double> sum((image.height + 1) * (w + 1), 0.0), sq(sum.size(), 0.0);
    for (std::size_t y = 0; y < image.height; ++y) {
        double row = 0.0, row_sq = 0.0;
        for (std::size_t x = 0; x < w; ++x) {
            const double v = image.at(x, y) / 255.0;
            row += v;
            row_sq += v * v;
            sum[(y + 1) * (w + 1) + x + 1] = sum[y * (w + 1) + x + 1] + row;
            sq[(y + 1) * (w + 1) + x + 1] = sq[y * (w + 1) + x + 1] + row_sq;
        }
    }
    auto box_sum = [&](const std::vector<double>& s, std::size_t x, std::size_t y) {
        const std::size_t x1 = x + kPatchSize, y1 = y + kPatchSize;
        return s[y1 * (w + 1) + x1] - s[y * (w + 1) + x1] - s[y1 * (w + 1) + x] + s[y * (w + 1) + x];
    };

    Tensor grid({1, rows, cols});
    const std::size_t n_templates = bank.size();
    const auto n = static_cast<double>(kTemplateLen);
    std::vector<float> windows(kTemplateLen * cols);
    std::vector<float> dots(n_templates * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t y0 = r * stride;
        // windows[p][c]: pixel p of the window in column c.
        for (std::size_t dy = 0; dy < kPatchSize; ++dy) {
            const std::uint8_t* src = image.pixels.data() + (y0 + dy) * w;
            for (std::size_t dx = 0; dx < kPatchSize; ++dx) {
                float* dst = windows.data() + (dy * kPatchSize + dx) * cols;
                for (std::size_t c = 0; c < cols; ++c) dst[c] = src[c * stride + dx] / 255.0f;
            }
        }
        detail::gemm_nn(n_templates, cols, kTemplateLen, bank.normalized().data(), kTemplateLen, windows.data(),
                        cols, dots.data(), cols, false);
        for (std::size_t c = 0; c < cols; ++c) {
            const double s = box_sum(sum, c * stride, y0);
            const double ss = box_sum(sq, c * stride, y0);
            const double var = ss - s * s / n;
            float best = 0.0f;
            if (var > 1e-9) {
                const double inv = 1.0 / std::sqrt(var);
                for (std::size_t t = 0; t < n_templates; ++t)
                    best = std::max(best, static_cast<float>(dots[t * cols + c] * inv));
            }
            grid.at(0, r, c) = std::min(best, 1.0f);
        }
    }
    return map_from_grid(std::move(grid), image.width, image.height, stride);
}

void save_templates(const std::filesystem::path& path, const TemplateBank& bank) {
    if (bank.empty()) throw InvalidInput("save_templates: empty template bank");
    std::vector<float> data;
    data.reserve(bank.size() * kTemplateLen);
    for (const auto& t : bank.templates()) data.insert(data.end(), t.values().begin(), t.values().end());
    WeightRecord rec;
    rec.kind = kTemplatesKind;
    rec.attrs = {static_cast<std::uint32_t>(bank.size())};
    rec.weights = Tensor({bank.size(), 1, kPatchSize, kPatchSize}, std::move(data));
    write_records(path, {rec});
}

TemplateBank load_templates(const std::filesystem::path& path) {
    const auto records = read_records(path);
    if (records.size() != 1 || records[0].kind != kTemplatesKind)
        throw ParseError("weights file does not hold a template bank: " + path.string(), 0);
    const Tensor& all = records[0].weights;
    if (all.rank() != 4 || all.dim(1) != 1 || all.dim(2) != kPatchSize || all.dim(3) != kPatchSize)
        throw ParseError("template bank must be T x 1 x 96 x 96", 0);
    TemplateBank bank;
    for (std::size_t t = 0; t < all.dim(0); ++t) {
        std::vector<float> data(all.data() + t * kTemplateLen, all.data() + (t + 1) * kTemplateLen);
        bank.add(Tensor({1, kPatchSize, kPatchSize}, std::move(data)));
    }
    return bank;
}

}  // namespace sonarprop
