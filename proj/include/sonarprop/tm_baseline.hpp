#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "sonarprop/datagen.hpp"
#include "sonarprop/proposals.hpp"

namespace sonarprop {

// Positive training patches used as cross-correlation templates.
class TemplateBank {
public:
    TemplateBank() = default;
    explicit TemplateBank(std::vector<Tensor> templates);

    std::size_t size() const { return templates_.size(); }
    bool empty() const { return templates_.empty(); }
    const std::vector<Tensor>& templates() const { return templates_; }
    void add(Tensor templ);

    // Zero-mean, unit-norm rows (size x 9216); rows of constant templates are 0.
    const std::vector<float>& normalized() const { return normalized_; }

private:
    std::vector<Tensor> templates_;
    std::vector<float> normalized_;
};

// T distinct positive (objectness > 0) patches drawn uniformly without replacement.
TemplateBank select_templates(const std::vector<LabeledPatch>& train_set, std::size_t count, std::uint64_t seed);

// max over templates of the normalized cross-correlation, negatives clamped to 0.
float tm_objectness(const TemplateBank& bank, const Tensor& patch);

// tm_objectness for every stride-aligned window, computed as one matrix
// product per window row with window statistics from integral images.
ObjectnessMap objectness_map_tm(const TemplateBank& bank, const GrayImage& image, std::size_t stride = 4);

// Stored in the SPNW1 container as a single record of kind "templates"
// with weights T x 1 x 96 x 96.
void save_templates(const std::filesystem::path& path, const TemplateBank& bank);
TemplateBank load_templates(const std::filesystem::path& path);

}  // namespace sonarprop
