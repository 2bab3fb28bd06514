#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sonarprop/geometry.hpp"
#include "sonarprop/image.hpp"
#include "sonarprop/models.hpp"

namespace sonarprop {

inline constexpr double kDefaultNmsThreshold = 0.8;

// Objectness for every stride-aligned window plus its dense rendering.
//
// grid(i, j) is the score of the window with top-left corner
// (j * stride, i * stride). `scores` is the H x W map where each grid value
// sits at its window centre and is bilinearly interpolated between centres;
// pixels whose window would leave the image are 0 and masked out.
struct ObjectnessMap {
    Tensor grid;    // 1 x rows x cols
    Tensor scores;  // 1 x H x W
    std::vector<std::uint8_t> valid;  // H x W
    std::size_t stride = 4;
    std::size_t window = kPatchSize;

    std::size_t rows() const { return grid.dim(1); }
    std::size_t cols() const { return grid.dim(2); }
    std::size_t height() const { return scores.dim(1); }
    std::size_t width() const { return scores.dim(2); }
    BoundingBox window_at(std::size_t row, std::size_t col) const;
};

struct Proposal {
    BoundingBox box;
    float score = 0.0f;
    bool operator==(const Proposal&) const = default;
};

// Builds the dense rendering around a grid of window scores.
ObjectnessMap map_from_grid(Tensor grid, std::size_t width, std::size_t height, std::size_t stride,
                            std::size_t window = kPatchSize);

// Evaluates the patch network on every stride-aligned 96 x 96 window.
ObjectnessMap objectness_map_sliding(const Network& patch_net, const GrayImage& image, std::size_t stride = 4);

// One full-image pass of a fully convolutional network (see fc_to_conv).
// Output cell (i, j) belongs to the window with top-left corner (s*i, s*j),
// s being the product of the pooling sizes (4 for both architectures).
ObjectnessMap objectness_map_fcn(const Network& converted, const GrayImage& image);

// Windows with score strictly above t_o, by descending score; ties keep
// row-major window order.
std::vector<Proposal> proposals_by_threshold(const ObjectnessMap& map, double t_o);

// The k best windows by descending score, ties in row-major order.
std::vector<Proposal> proposals_by_ranking(const ObjectnessMap& map, std::size_t k);

// Greedy suppression: keep the best remaining proposal, drop everything with
// IoU > t_s against a kept one. Equal scores keep input order.
std::vector<Proposal> nms(std::vector<Proposal> proposals, double t_s = kDefaultNmsThreshold);

enum class ExtractionMode { threshold, ranking };
enum class NmsOrder { after_selection, before_selection };

// Thresholding or top-k selection followed by NMS. With before_selection the
// whole grid is suppressed first and the selection applies to the survivors.
std::vector<Proposal> extract_proposals(const ObjectnessMap& map, ExtractionMode mode, double parameter,
                                        double t_s = kDefaultNmsThreshold,
                                        NmsOrder order = NmsOrder::after_selection);

// Proposals CSV: header "x,y,w,h,score", one row per proposal.
void write_proposals_csv(const std::filesystem::path& path, const std::vector<Proposal>& proposals);
std::vector<Proposal> read_proposals_csv(const std::filesystem::path& path);

// Multi-image variant with a leading "image" column.
void write_proposal_sets_csv(const std::filesystem::path& path,
                             const std::map<std::string, std::vector<Proposal>>& sets);
std::map<std::string, std::vector<Proposal>> read_proposal_sets_csv(const std::filesystem::path& path);

}  // namespace sonarprop
