#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sonarprop/annotations.hpp"
#include "sonarprop/proposals.hpp"

namespace sonarprop {

inline constexpr double kDefaultMatchThreshold = 0.5;

struct ImageEval {
    std::string image;
    std::size_t matched = 0;
    std::size_t ground_truth = 0;
    std::size_t proposals = 0;
};

struct ImageFailure {
    std::string image;
    std::string message;
};

// Recall is the per-image TP / (TP + FN) averaged over images that have at
// least one ground-truth box, in percent. Images without boxes only count
// towards mean_proposals. A proposal may cover several boxes and a box may be
// covered by several proposals.
struct EvalResult {
    std::string method;
    double parameter = 0.0;
    std::vector<ImageEval> images;
    double mean_recall = 0.0;
    double mean_proposals = 0.0;
    std::vector<ImageFailure> failures;
};

// A ground-truth box is found when some proposal has IoU strictly above t_d.
std::size_t count_matched(const std::vector<Proposal>& proposals, const std::vector<BoundingBox>& ground_truth,
                          double t_d = kDefaultMatchThreshold);

EvalResult match_and_recall(const std::vector<std::vector<Proposal>>& proposals,
                            const std::vector<std::vector<BoundingBox>>& ground_truth,
                            double t_d = kDefaultMatchThreshold);

// Fills mean_recall / mean_proposals from the per-image entries.
void aggregate(EvalResult& result);

class ProposalGenerator {
public:
    virtual ~ProposalGenerator() = default;
    virtual std::string name() const = 0;
    // Full pipeline for one image at one sweep value.
    virtual std::vector<Proposal> generate(const Annotation& image, double parameter) const = 0;
    // One proposal set per sweep value; overridden where work can be shared.
    virtual std::vector<std::vector<Proposal>> generate_sweep(const Annotation& image,
                                                              const std::vector<double>& parameters) const;
};

using MapFunction = std::function<ObjectnessMap(const GrayImage&)>;

// Objectness map followed by thresholding or top-k and NMS. The map is
// computed once per image in a sweep.
class MapProposalGenerator : public ProposalGenerator {
public:
    MapProposalGenerator(std::string name, MapFunction map_fn, ExtractionMode mode,
                         double t_s = kDefaultNmsThreshold, NmsOrder order = NmsOrder::after_selection);

    std::string name() const override { return name_; }
    std::vector<Proposal> generate(const Annotation& image, double parameter) const override;
    std::vector<std::vector<Proposal>> generate_sweep(const Annotation& image,
                                                      const std::vector<double>& parameters) const override;

private:
    std::string name_;
    MapFunction map_fn_;
    ExtractionMode mode_;
    double t_s_;
    NmsOrder order_;
};

// Proposals produced elsewhere, keyed by image file stem. With ranking the
// best k by score are kept, with threshold those scoring above the value; NMS
// is applied only when t_s is given.
class ExternalProposalGenerator : public ProposalGenerator {
public:
    ExternalProposalGenerator(std::string name, std::map<std::string, std::vector<Proposal>> sets,
                              ExtractionMode mode, std::optional<double> t_s = std::nullopt);

    std::string name() const override { return name_; }
    std::vector<Proposal> generate(const Annotation& image, double parameter) const override;

private:
    std::string name_;
    std::map<std::string, std::vector<Proposal>> sets_;
    ExtractionMode mode_;
    std::optional<double> t_s_;
};

// Key used to pair proposal sets with annotations: the file stem.
std::string image_key(const std::string& file);

// A single CSV with an "image" column, or a directory of per-image CSVs
// named after the image stems.
std::map<std::string, std::vector<Proposal>> import_external_proposals(const std::filesystem::path& path);

// Evaluates every image once per sweep value. Images whose generator throws
// are listed in each result's failures and excluded from the means.
std::vector<EvalResult> recall_curve(const ProposalGenerator& generator, const std::vector<Annotation>& images,
                                     const std::vector<double>& sweep, double t_d = kDefaultMatchThreshold,
                                     std::size_t workers = 1);

// Whitespace-separated "<k|threshold> meanRecall meanNumProposals".
void write_curve_csv(const std::filesystem::path& path, const std::vector<EvalResult>& curve, ExtractionMode mode);
std::string curve_filename(ExtractionMode mode, double t_d, double t_s, const std::string& prefix = "");

struct TimingResult {
    std::string method;
    double mean_s = 0.0;
    double std_s = 0.0;
    std::size_t n_images = 0;
    std::size_t repetitions = 0;
};

// Wall-clock seconds per image for generate(image, parameter), serial over
// images, after one untimed warm-up image.
TimingResult timing_bench(const ProposalGenerator& generator, const std::vector<Annotation>& images,
                          double parameter, std::size_t repetitions = 3);
void write_timing_json(const std::filesystem::path& path, const TimingResult& timing);

}  // namespace sonarprop
