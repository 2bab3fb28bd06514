#include "sonarprop/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>

#include <json.hpp>

#include "sonarprop/errors.hpp"

namespace sonarprop {

std::size_t count_matched(const std::vector<Proposal>& proposals, const std::vector<BoundingBox>& ground_truth,
                          double t_d) {
    std::size_t matched = 0;
    for (const auto& gt : ground_truth)
        if (std::any_of(proposals.begin(), proposals.end(), [&](const Proposal& p) { return iou(p.box, gt) > t_d; }))
            ++matched;
    return matched;
}

void aggregate(EvalResult& result) {
    double recall = 0.0, proposals = 0.0;
    std::size_t with_gt = 0;
    for (const auto& e : result.images) {
        proposals += static_cast<double>(e.proposals);
        if (e.ground_truth == 0) continue;
        recall += static_cast<double>(e.matched) / static_cast<double>(e.ground_truth);
        ++with_gt;
    }
    result.mean_recall = with_gt ? 100.0 * recall / static_cast<double>(with_gt) : 0.0;
    result.mean_proposals = result.images.empty() ? 0.0 : proposals / static_cast<double>(result.images.size());
}

EvalResult match_and_recall(const std::vector<std::vector<Proposal>>& proposals,
                            const std::vector<std::vector<BoundingBox>>& ground_truth, double t_d) {
    if (proposals.empty()) throw InvalidInput("match_and_recall: empty image set");
    if (proposals.size() != ground_truth.size())
        throw InvalidInput("match_and_recall: proposal and ground-truth image counts differ");
    EvalResult result;
    for (std::size_t i = 0; i < proposals.size(); ++i)
        result.images.push_back({std::to_string(i), count_matched(proposals[i], ground_truth[i], t_d),
                                 ground_truth[i].size(), proposals[i].size()});
    aggregate(result);
    return result;
}

std::vector<std::vector<Proposal>> ProposalGenerator::generate_sweep(const Annotation& image,
                                                                     const std::vector<double>& parameters) const {
    std::vector<std::vector<Proposal>> out;
    for (double p : parameters) out.push_back(generate(image, p));
    return out;
}

MapProposalGenerator::MapProposalGenerator(std::string name, MapFunction map_fn, ExtractionMode mode, double t_s,
                                           NmsOrder order)
    : name_(std::move(name)), map_fn_(std::move(map_fn)), mode_(mode), t_s_(t_s), order_(order) {}

std::vector<Proposal> MapProposalGenerator::generate(const Annotation& image, double parameter) const {
    return extract_proposals(map_fn_(image.image), mode_, parameter, t_s_, order_);
}

std::vector<std::vector<Proposal>> MapProposalGenerator::generate_sweep(const Annotation& image,
                                                                        const std::vector<double>& parameters) const {
    const ObjectnessMap map = map_fn_(image.image);
    std::vector<std::vector<Proposal>> out;
    for (double p : parameters) out.push_back(extract_proposals(map, mode_, p, t_s_, order_));
    return out;
}

ExternalProposalGenerator::ExternalProposalGenerator(std::string name,
                                                     std::map<std::string, std::vector<Proposal>> sets,
                                                     ExtractionMode mode, std::optional<double> t_s)
    : name_(std::move(name)), mode_(mode), t_s_(t_s) {
    for (auto& [key, props] : sets) sets_[image_key(key)] = std::move(props);
}

std::vector<Proposal> ExternalProposalGenerator::generate(const Annotation& image, double parameter) const {
    const auto it = sets_.find(image_key(image.file));
    if (it == sets_.end()) throw InvalidInput("no imported proposals for image " + image.file);
    std::vector<Proposal> props = it->second;
    std::stable_sort(props.begin(), props.end(), [](const Proposal& a, const Proposal& b) { return a.score > b.score; });
    if (mode_ == ExtractionMode::threshold) {
        std::erase_if(props, [&](const Proposal& p) { return !(p.score > parameter); });
    } else {
        if (parameter < 0.0) throw InvalidInput("ranking needs k >= 0");
        const auto k = static_cast<std::size_t>(parameter);
        if (props.size() > k) props.resize(k);
    }
    if (t_s_) props = nms(std::move(props), *t_s_);
    return props;
}

std::string image_key(const std::string& file) { return std::filesystem::path(file).stem().string(); }

std::map<std::string, std::vector<Proposal>> import_external_proposals(const std::filesystem::path& path) {
    if (!std::filesystem::is_directory(path)) return read_proposal_sets_csv(path);
    std::map<std::string, std::vector<Proposal>> out;
    for (const auto& entry : std::filesystem::directory_iterator(path))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            out[entry.path().stem().string()] = read_proposals_csv(entry.path());
    return out;
}

std::vector<EvalResult> recall_curve(const ProposalGenerator& generator, const std::vector<Annotation>& images,
                                     const std::vector<double>& sweep, double t_d, std::size_t workers) {
    if (sweep.empty()) throw InvalidInput("recall_curve: empty sweep");
    if (images.empty()) throw InvalidInput("recall_curve: empty image set");
    if (workers < 1) throw InvalidInput("recall_curve: workers must be >= 1");
    const std::size_t n = images.size();
    std::vector<std::vector<ImageEval>> per_image(n);
    std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic) num_threads(static_cast<int>(workers))
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        try {
            const auto sets = generator.generate_sweep(images[i], sweep);
            for (const auto& props : sets)
                per_image[i].push_back(
                    {images[i].file, count_matched(props, images[i].boxes, t_d), images[i].boxes.size(), props.size()});
        } catch (const std::exception& e) {
            per_image[i].clear();
            errors[i] = e.what();
            if (errors[i].empty()) errors[i] = "unknown error";
        }
    }
    std::vector<EvalResult> curve(sweep.size());
    for (std::size_t s = 0; s < sweep.size(); ++s) {
        curve[s].method = generator.name();
        curve[s].parameter = sweep[s];
        for (std::size_t i = 0; i < n; ++i) {
            if (!errors[i].empty())
                curve[s].failures.push_back({images[i].file, errors[i]});
            else
                curve[s].images.push_back(per_image[i][s]);
        }
        aggregate(curve[s]);
    }
    return curve;
}

void write_curve_csv(const std::filesystem::path& path, const std::vector<EvalResult>& curve, ExtractionMode mode) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write curve CSV: " + path.string());
    os << (mode == ExtractionMode::ranking ? "k" : "threshold") << " meanRecall meanNumProposals\n";
    os << std::setprecision(10);
    for (const auto& r : curve) os << r.parameter << " " << r.mean_recall << " " << r.mean_proposals << "\n";
    if (!os) throw IoError("failed writing curve CSV: " + path.string());
}

std::string curve_filename(ExtractionMode mode, double t_d, double t_s, const std::string& prefix) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%sVsRecallAtIoU%.2fNMS%.2f.csv",
                  mode == ExtractionMode::ranking ? "topK" : "threshold", t_d, t_s);
    return prefix + buf;
}

TimingResult timing_bench(const ProposalGenerator& generator, const std::vector<Annotation>& images,
                          double parameter, std::size_t repetitions) {
    if (repetitions < 3) throw InvalidInput("timing_bench: repetitions must be >= 3");
    if (images.empty()) throw InvalidInput("timing_bench: empty image set");
    using clock = std::chrono::steady_clock;
    (void)generator.generate(images.front(), parameter);
    std::vector<double> samples;
    for (std::size_t r = 0; r < repetitions; ++r) {
        for (const auto& img : images) {
            const auto t0 = clock::now();
            const auto props = generator.generate(img, parameter);
            samples.push_back(std::chrono::duration<double>(clock::now() - t0).count());
        }
    }
    TimingResult t{generator.name(), 0.0, 0.0, images.size(), repetitions};
    for (double s : samples) t.mean_s += s;
    t.mean_s /= static_cast<double>(samples.size());
    double var = 0.0;
    for (double s : samples) var += (s - t.mean_s) * (s - t.mean_s);
    t.std_s = samples.size() > 1 ? std::sqrt(var / static_cast<double>(samples.size() - 1)) : 0.0;
    return t;
}

void write_timing_json(const std::filesystem::path& path, const TimingResult& timing) {
    nlohmann::json j{{"method", timing.method},
                     {"mean_s", timing.mean_s},
                     {"std_s", timing.std_s},
                     {"n_images", timing.n_images}};
    std::ofstream os(path);
    if (!os) throw IoError("cannot write timing JSON: " + path.string());
    os << j.dump(1) << "\n";
}

}  // namespace sonarprop
