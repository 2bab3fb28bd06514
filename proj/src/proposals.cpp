#include "sonarprop/proposals.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "sonarprop/errors.hpp"

namespace sonarprop {

BoundingBox ObjectnessMap::window_at(std::size_t row, std::size_t col) const {
    return {static_cast<int>(col * stride), static_cast<int>(row * stride), static_cast<int>(window),
            static_cast<int>(window)};
}

ObjectnessMap map_from_grid(Tensor grid, std::size_t width, std::size_t height, std::size_t stride,
                            std::size_t window) {
    if (grid.rank() != 3 || grid.dim(0) != 1) throw InvalidInput("map_from_grid: grid must be 1 x rows x cols");
    const std::size_t rows = grid.dim(1), cols = grid.dim(2);
    if ((rows - 1) * stride + window > height || (cols - 1) * stride + window > width)
        throw InvalidInput("map_from_grid: grid does not fit the image");
    ObjectnessMap map;
    map.stride = stride;
    map.window = window;
    map.scores = Tensor({1, height, width});
    map.valid.assign(height * width, 0);
    const std::size_t span_h = (rows - 1) * stride + 1, span_w = (cols - 1) * stride + 1;
    const Tensor dense = bilinear_resize(grid, span_h, span_w);
    const std::size_t off = window / 2;
    for (std::size_t y = 0; y < span_h; ++y)
        for (std::size_t x = 0; x < span_w; ++x) {
            map.scores.at(0, y + off, x + off) = dense.at(0, y, x);
            map.valid[(y + off) * width + x + off] = 1;
        }
    map.grid = std::move(grid);
    return map;
}

ObjectnessMap objectness_map_sliding(const Network& patch_net, const GrayImage& image, std::size_t stride) {
    if (image.width < kPatchSize || image.height < kPatchSize)
        throw InvalidInput("objectness_map_sliding: image smaller than 96 x 96");
    if (stride < 1) throw InvalidInput("objectness_map_sliding: stride must be >= 1");
    const std::size_t rows = (image.height - kPatchSize) / stride + 1;
    const std::size_t cols = (image.width - kPatchSize) / stride + 1;
    Tensor grid({1, rows, cols});
    const auto total = static_cast<std::ptrdiff_t>(rows * cols);
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t idx = 0; idx < total; ++idx) {
        const std::size_t r = static_cast<std::size_t>(idx) / cols, c = static_cast<std::size_t>(idx) % cols;
        grid[static_cast<std::size_t>(idx)] =
            forward_patch(patch_net, crop_tensor(image, c * stride, r * stride, kPatchSize, kPatchSize));
    }
    return map_from_grid(std::move(grid), image.width, image.height, stride);
}

ObjectnessMap objectness_map_fcn(const Network& converted, const GrayImage& image) {
    if (image.width < kPatchSize || image.height < kPatchSize)
        throw InvalidInput("objectness_map_fcn: image smaller than 96 x 96");
    if (!is_fully_convolutional(converted.spec))
        throw InvalidInput("objectness_map_fcn: network has dense layers; convert it with fc_to_conv first");
    const Tensor out = forward(converted, to_tensor(image));
    if (out.rank() != 3 || out.dim(0) != 1) throw InvalidInput("objectness_map_fcn: network must emit one channel");
    std::size_t stride = 1;
    for (const auto& l : converted.spec.layers)
        if (l.kind == LayerKind::maxpool) stride *= l.pool;
    const std::size_t rows = std::min(out.dim(1), (image.height - kPatchSize) / stride + 1);
    const std::size_t cols = std::min(out.dim(2), (image.width - kPatchSize) / stride + 1);
    Tensor grid({1, rows, cols});
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) grid.at(0, r, c) = out.at(0, r, c);
    return map_from_grid(std::move(grid), image.width, image.height, stride);
}

namespace {

// Grid indices ordered by descending score, ties by index.
std::vector<std::size_t> ranked_indices(const ObjectnessMap& map, std::size_t limit) {
    std::vector<std::size_t> idx(map.grid.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto better = [&](std::size_t a, std::size_t b) {
        if (map.grid[a] != map.grid[b]) return map.grid[a] > map.grid[b];
        return a < b;
    };
    limit = std::min(limit, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(limit), idx.end(), better);
    idx.resize(limit);
    return idx;
}

Proposal proposal_at(const ObjectnessMap& map, std::size_t index) {
    return {map.window_at(index / map.cols(), index % map.cols()), map.grid[index]};
}

}  // namespace

std::vector<Proposal> proposals_by_threshold(const ObjectnessMap& map, double t_o) {
    std::vector<Proposal> out;
    for (std::size_t i = 0; i < map.grid.size(); ++i)
        if (map.grid[i] > t_o) out.push_back(proposal_at(map, i));
    std::stable_sort(out.begin(), out.end(), [](const Proposal& a, const Proposal& b) { return a.score > b.score; });
    return out;
}

std::vector<Proposal> proposals_by_ranking(const ObjectnessMap& map, std::size_t k) {
    std::vector<Proposal> out;
    for (std::size_t i : ranked_indices(map, k)) out.push_back(proposal_at(map, i));
    return out;
}

std::vector<Proposal> nms(std::vector<Proposal> proposals, double t_s) {
    if (!(t_s >= 0.0 && t_s <= 1.0)) throw InvalidInput("nms: threshold outside [0, 1]");
    std::stable_sort(proposals.begin(), proposals.end(),
                     [](const Proposal& a, const Proposal& b) { return a.score > b.score; });
    std::vector<Proposal> kept;
    for (const auto& p : proposals) {
        const bool suppressed =
            std::any_of(kept.begin(), kept.end(), [&](const Proposal& k) { return iou(k.box, p.box) > t_s; });
        if (!suppressed) kept.push_back(p);
    }
    return kept;
}

std::vector<Proposal> extract_proposals(const ObjectnessMap& map, ExtractionMode mode, double parameter,
                                        double t_s, NmsOrder order) {
    if (mode == ExtractionMode::ranking && parameter < 0.0) throw InvalidInput("ranking needs k >= 0");
    const auto k = static_cast<std::size_t>(parameter);
    if (order == NmsOrder::after_selection) {
        auto selected = mode == ExtractionMode::threshold ? proposals_by_threshold(map, parameter)
                                                          : proposals_by_ranking(map, k);
        return nms(std::move(selected), t_s);
    }
    auto survivors = nms(proposals_by_threshold(map, -1.0), t_s);
    if (mode == ExtractionMode::threshold) {
        std::erase_if(survivors, [&](const Proposal& p) { return !(p.score > parameter); });
    } else if (survivors.size() > k) {
        survivors.resize(k);
    }
    return survivors;
}

void write_proposals_csv(const std::filesystem::path& path, const std::vector<Proposal>& proposals) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write proposals CSV: " + path.string());
    os << "x,y,w,h,score\n" << std::setprecision(9);
    for (const auto& p : proposals) os << p.box.x << "," << p.box.y << "," << p.box.w << "," << p.box.h << "," << p.score << "\n";
    if (!os) throw IoError("failed writing proposals CSV: " + path.string());
}

void write_proposal_sets_csv(const std::filesystem::path& path,
                             const std::map<std::string, std::vector<Proposal>>& sets) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write proposals CSV: " + path.string());
    os << "image,x,y,w,h,score\n" << std::setprecision(9);
    for (const auto& [image, proposals] : sets)
        for (const auto& p : proposals)
            os << image << "," << p.box.x << "," << p.box.y << "," << p.box.w << "," << p.box.h << "," << p.score << "\n";
    if (!os) throw IoError("failed writing proposals CSV: " + path.string());
}

std::vector<Proposal> read_proposals_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open proposals CSV: " + path.string());
    std::string line;
    if (!std::getline(is, line) || line.rfind("x,y,w,h,score", 0) != 0)
        throw ParseError("proposals CSV must start with header x,y,w,h,score", 0);
    std::vector<Proposal> out;
    std::size_t row = 0;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        Proposal p;
        char c1, c2, c3, c4;
        std::istringstream ls(line);
        if (!(ls >> p.box.x >> c1 >> p.box.y >> c2 >> p.box.w >> c3 >> p.box.h >> c4 >> p.score) || c1 != ',' ||
            c2 != ',' || c3 != ',' || c4 != ',')
            throw ParseError("malformed proposals row in " + path.string(), row);
        if (p.box.w <= 0 || p.box.h <= 0) throw ParseError("proposal with non-positive extent", row);
        out.push_back(p);
    }
    return out;
}

std::map<std::string, std::vector<Proposal>> read_proposal_sets_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open proposals CSV: " + path.string());
    std::string line;
    if (!std::getline(is, line) || line.rfind("image,x,y,w,h,score", 0) != 0)
        throw ParseError("proposal sets CSV must start with header image,x,y,w,h,score", 0);
    std::map<std::string, std::vector<Proposal>> out;
    std::size_t row = 0;
    while (std::getline(is, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == 0 || comma == std::string::npos) throw ParseError("missing image column", row);
        Proposal p;
        char c1, c2, c3, c4;
        std::istringstream ls(line.substr(comma + 1));
        if (!(ls >> p.box.x >> c1 >> p.box.y >> c2 >> p.box.w >> c3 >> p.box.h >> c4 >> p.score) || c1 != ',' ||
            c2 != ',' || c3 != ',' || c4 != ',')
            throw ParseError("malformed proposals row in " + path.string(), row);
        if (p.box.w <= 0 || p.box.h <= 0) throw ParseError("proposal with non-positive extent", row);
        out[line.substr(0, comma)].push_back(p);
    }
    return out;
}

}  // namespace sonarprop
