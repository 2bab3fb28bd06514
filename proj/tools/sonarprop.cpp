// sonarprop: synth | train | propose | eval | convert-voc
//
// Exit codes: 0 success, 1 input error (bad flags, unreadable or malformed
// inputs, incompatible weights), 2 runtime abort (divergence, sampling
// exhaustion, anything else).

#include <CLI11.hpp>
#include <omp.h>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sonarprop/annotations.hpp"
#include "sonarprop/datagen.hpp"
#include "sonarprop/errors.hpp"
#include "sonarprop/eval.hpp"
#include "sonarprop/proposals.hpp"
#include "sonarprop/synth.hpp"
#include "sonarprop/tm_baseline.hpp"
#include "sonarprop/trainer.hpp"
#include "sonarprop/weights_io.hpp"

namespace fs = std::filesystem;
using namespace sonarprop;

namespace {

struct Options {
    // shared
    std::string model = "fcn";
    std::string mode = "ranking";
    std::optional<double> t_o;
    std::optional<double> k;
    double t_s = kDefaultNmsThreshold;
    bool t_s_given = false;
    double t_d = kDefaultMatchThreshold;
    std::size_t stride = 4;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    std::string out;

    // synth
    std::size_t count = 10;
    std::size_t width = 480;
    std::size_t height = 320;
    std::size_t min_objects = 1;
    std::size_t max_objects = 3;

    // train
    std::string data;
    double split = 0.7;
    std::size_t epochs = 50;
    std::size_t batch = 64;
    float lr = 0.01f;
    std::size_t patience = 5;
    std::size_t templates = 100;

    // propose / eval
    std::string weights;
    std::string image;
    bool write_map = false;
    std::string proposals;
    std::string name;
    std::vector<double> sweep;
    std::string nms_order = "after";
    std::size_t timing_images = 10;
    std::size_t timing_reps = 3;
    bool no_timing = false;

    // convert-voc
    std::string xml_dir;
    std::string image_dir;
};

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

ExtractionMode parse_mode(const std::string& m) { return m == "threshold" ? ExtractionMode::threshold : ExtractionMode::ranking; }

fs::path prepare_out(const Options& o) {
    if (o.out.empty()) throw InputError("--out is required");
    fs::path out(o.out);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) throw InputError("cannot create output directory " + out.string());
    return out;
}

bool same_layers(const NetworkSpec& a, const NetworkSpec& b) { return a.layers == b.layers; }

// Identifies a loaded network as one of the two architectures.
std::string architecture_of(const Network& net) {
    for (Padding p : {Padding::valid, Padding::same}) {
        if (same_layers(net.spec, build_cnn(1, p).spec)) return "cnn";
        if (same_layers(net.spec, build_fcn_tiny(1, p).spec)) return "fcn";
    }
    return "unknown";
}

Network load_model_network(const Options& o) {
    if (o.weights.empty()) throw InputError("--weights is required for --model " + o.model);
    Network net;
    try {
        net = load_network(o.weights);
    } catch (const ParseError& e) {
        throw InputError("weights file " + o.weights + " is not usable with --model " + o.model + ": " + e.what());
    }
    const std::string arch = architecture_of(net);
    if (arch != o.model)
        throw InputError("weights file " + o.weights + " holds a " + arch + " network, incompatible with --model " +
                         o.model);
    return net;
}

TemplateBank load_model_templates(const Options& o) {
    if (o.weights.empty()) throw InputError("--weights is required for --model tm");
    try {
        return load_templates(o.weights);
    } catch (const ParseError& e) {
        throw InputError("weights file " + o.weights + " is not usable with --model tm: " + e.what());
    }
}

MapFunction make_map_function(const Options& o) {
    if (o.model == "tm") {
        auto bank = std::make_shared<TemplateBank>(load_model_templates(o));
        const std::size_t stride = o.stride;
        return [bank, stride](const GrayImage& img) { return objectness_map_tm(*bank, img, stride); };
    }
    auto net = std::make_shared<Network>(load_model_network(o));
    if (o.model == "fcn") {
        if (o.stride != 4) throw InputError("--model fcn produces a stride-4 grid; --stride must be 4");
        auto converted = std::make_shared<Network>(fc_to_conv(*net));
        return [converted](const GrayImage& img) { return objectness_map_fcn(*converted, img); };
    }
    const std::size_t stride = o.stride;
    return [net, stride](const GrayImage& img) { return objectness_map_sliding(*net, img, stride); };
}

std::string method_name(const Options& o) {
    if (!o.name.empty()) return o.name;
    std::string m = o.proposals.empty() ? o.model : std::string("external");
    for (char& c : m) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return m + (o.mode == "ranking" ? "-Ranking" : "-Threshold");
}

double selection_parameter(const Options& o) {
    if (o.mode == "ranking") {
        if (!o.k) throw InputError("--mode ranking needs --k");
        return *o.k;
    }
    if (!o.t_o) throw InputError("--mode threshold needs --t-o");
    return *o.t_o;
}

int cmd_synth(const Options& o) {
    const fs::path out = prepare_out(o);
    const auto anns = synth_dataset(o.count, o.width, o.height, o.seed, o.min_objects, o.max_objects);
    for (const auto& a : anns) write_image(out / a.file, a.image);
    save_annotations(out / "annotations.json", anns);
    std::size_t boxes = 0;
    for (const auto& a : anns) boxes += a.boxes.size();
    std::cout << "wrote " << anns.size() << " images with " << boxes << " objects to " << out.string() << "\n";
    return 0;
}

int cmd_train(const Options& o) {
    if (o.data.empty()) throw InputError("--data is required");
    const fs::path out = prepare_out(o);
    const auto anns = load_annotations(o.data);
    WindowOptions wopt;
    wopt.stride = o.stride;
    const PatchDataset ds = build_patch_dataset(anns, o.split, o.seed, wopt);
    std::cout << "patches: " << ds.train.size() << " train (" << ds.train_images.size() << " images), "
              << ds.validation.size() << " validation (" << ds.validation_images.size() << " images)\n";

    if (o.model == "tm") {
        const TemplateBank bank = select_templates(ds.train, o.templates, o.seed);
        save_templates(out / "templates.spnw", bank);
        std::cout << "saved " << bank.size() << " templates to " << (out / "templates.spnw").string() << "\n";
        return 0;
    }
    if (ds.validation.empty()) throw InputError("validation split is empty; lower --split or add images");

    TrainConfig cfg;
    cfg.learning_rate = o.lr;
    cfg.batch_size = o.batch;
    cfg.max_epochs = o.epochs;
    cfg.patience = o.patience;
    cfg.seed = o.seed;
    cfg.on_epoch = [](const EpochRecord& r) {
        std::printf("epoch %zu train_mse %.6f val_mse %.6f\n", r.epoch, r.train_mse, r.val_mse);
        std::fflush(stdout);
    };
    const Network init = o.model == "cnn" ? build_cnn(o.seed) : build_fcn_tiny(o.seed);
    const TrainResult r = train(init, ds.train, ds.validation, cfg);
    save_network(out / "weights.spnw", r.best);
    write_history_csv(out / "history.csv", r.history);
    std::printf("best epoch %zu val_mse %.6f%s\n", r.best_epoch, r.best_val_mse,
                r.early_stopped ? " (early stopped)" : "");
    return 0;
}

int cmd_propose(const Options& o) {
    if (o.image.empty()) throw InputError("--image is required");
    const fs::path out = prepare_out(o);
    const double param = selection_parameter(o);
    const MapFunction map_fn = make_map_function(o);
    const GrayImage img = read_image(o.image);
    const ObjectnessMap map = map_fn(img);
    const auto props = extract_proposals(map, parse_mode(o.mode), param, o.t_s,
                                         o.nms_order == "before" ? NmsOrder::before_selection : NmsOrder::after_selection);
    const std::string stem = fs::path(o.image).stem().string();
    write_proposals_csv(out / (stem + "_proposals.csv"), props);
    if (o.write_map) write_image(out / (stem + "_objectness.pgm"), quantize_map(map.scores));
    std::cout << props.size() << " proposals written to " << (out / (stem + "_proposals.csv")).string() << "\n";
    return 0;
}

std::vector<double> default_sweep(ExtractionMode mode) {
    if (mode == ExtractionMode::ranking) return {1, 2, 5, 10, 20, 50, 100, 200, 500, 1000};
    std::vector<double> s;
    for (int i = 0; i <= 19; ++i) s.push_back(0.05 * i);
    return s;
}

int cmd_eval(const Options& o) {
    if (o.data.empty()) throw InputError("--data is required");
    const fs::path out = prepare_out(o);
    const ExtractionMode mode = parse_mode(o.mode);
    std::vector<double> sweep = o.sweep;
    if (sweep.empty()) {
        if (mode == ExtractionMode::ranking && o.k) sweep = {*o.k};
        else if (mode == ExtractionMode::threshold && o.t_o) sweep = {*o.t_o};
        else sweep = default_sweep(mode);
    }
    const auto anns = load_annotations(o.data);

    std::unique_ptr<ProposalGenerator> gen;
    if (!o.proposals.empty()) {
        // Imported sets are only suppressed when asked for explicitly.
        std::optional<double> t_s;
        if (o.t_s_given) t_s = o.t_s;
        gen = std::make_unique<ExternalProposalGenerator>(method_name(o), import_external_proposals(o.proposals),
                                                          mode, t_s);
    } else {
        gen = std::make_unique<MapProposalGenerator>(
            method_name(o), make_map_function(o), mode, o.t_s,
            o.nms_order == "before" ? NmsOrder::before_selection : NmsOrder::after_selection);
    }

    const std::string prefix = method_name(o) + "_";
    const auto curve = recall_curve(*gen, anns, sweep, o.t_d, o.workers);
    write_curve_csv(out / curve_filename(mode, o.t_d, o.t_s, prefix), curve, mode);
    {
        std::ofstream log(out / (prefix + "failures.log"));
        for (const auto& f : curve.front().failures) log << f.image << ": " << f.message << "\n";
    }
    if (!curve.front().failures.empty())
        std::cerr << curve.front().failures.size() << " image(s) failed; see "
                  << (out / (prefix + "failures.log")).string() << "\n";
    for (const auto& r : curve)
        std::printf("%s %g recall %.2f%% proposals %.2f\n", r.method.c_str(), r.parameter, r.mean_recall,
                    r.mean_proposals);

    if (!o.no_timing) {
        std::vector<Annotation> subset(anns.begin(), anns.begin() + static_cast<std::ptrdiff_t>(
                                                                       std::min(o.timing_images, anns.size())));
        const TimingResult t = timing_bench(*gen, subset, sweep.back(), o.timing_reps);
        write_timing_json(out / (prefix + "timing.json"), t);
        std::printf("%s %.4f +- %.4f s per image (%zu images)\n", t.method.c_str(), t.mean_s, t.std_s, t.n_images);
    }
    return 0;
}

int cmd_convert_voc(const Options& o) {
    if (o.xml_dir.empty() || o.image_dir.empty()) throw InputError("--xml and --images are required");
    const fs::path out = prepare_out(o);
    const ConversionReport r = convert_voc_annotations(o.xml_dir, o.image_dir, out / "annotations.json");
    std::cout << r.images << " images, " << r.boxes << " boxes (" << r.clipped_boxes << " clipped, "
              << r.dropped_boxes << " dropped)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"Objectness-based detection proposals for forward-looking sonar images"};
    app.set_config("--config", "", "TOML/INI file whose keys mirror the flags");
    app.require_subcommand(1);

    auto add_shared = [&](CLI::App* sub) {
        sub->add_option("--seed", o.seed, "Seed for all randomness");
        sub->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--out", o.out, "Output directory")->required();
    };
    auto add_model = [&](CLI::App* sub) {
        sub->add_option("--model", o.model, "cnn | fcn | tm")->check(CLI::IsMember({"cnn", "fcn", "tm"}));
        sub->add_option("--stride", o.stride, "Window grid stride in pixels")->check(CLI::PositiveNumber);
    };
    auto add_selection = [&](CLI::App* sub) {
        sub->add_option("--weights", o.weights, "Network or template file");
        sub->add_option("--mode", o.mode, "threshold | ranking")->check(CLI::IsMember({"threshold", "ranking"}));
        sub->add_option("--t-o", o.t_o, "Objectness threshold")->check(CLI::Range(-1.0, 1.0));
        sub->add_option("--k", o.k, "Number of top windows")->check(CLI::NonNegativeNumber);
        sub->add_option("--t-s", o.t_s, "NMS IoU threshold")->check(CLI::Range(0.0, 1.0));
        sub->add_option("--nms-order", o.nms_order, "after: select then suppress; before: suppress then select")
            ->check(CLI::IsMember({"after", "before"}));
    };

    auto* synth = app.add_subcommand("synth", "Generate a synthetic sonar dataset");
    add_shared(synth);
    synth->add_option("--count", o.count, "Number of images")->check(CLI::NonNegativeNumber);
    synth->add_option("--width", o.width, "Image width")->check(CLI::Range(192, 8192));
    synth->add_option("--height", o.height, "Image height")->check(CLI::Range(192, 8192));
    synth->add_option("--min-objects", o.min_objects, "Minimum objects per image");
    synth->add_option("--max-objects", o.max_objects, "Maximum objects per image");

    auto* train = app.add_subcommand("train", "Train a network or select TM templates");
    add_shared(train);
    add_model(train);
    train->add_option("--data", o.data, "Annotation JSON")->required();
    train->add_option("--split", o.split, "Fraction of images used for training")->check(CLI::Range(0.0, 1.0));
    train->add_option("--epochs", o.epochs, "Maximum epochs")->check(CLI::PositiveNumber);
    train->add_option("--batch", o.batch, "Batch size")->check(CLI::PositiveNumber);
    train->add_option("--lr", o.lr, "ADAM learning rate")->check(CLI::PositiveNumber);
    train->add_option("--patience", o.patience, "Early-stopping patience in epochs")->check(CLI::PositiveNumber);
    train->add_option("--templates", o.templates, "Template count for --model tm")->check(CLI::PositiveNumber);

    auto* propose = app.add_subcommand("propose", "Proposals for one image");
    add_shared(propose);
    add_model(propose);
    add_selection(propose);
    propose->add_option("--image", o.image, "Input image (PNG or PGM)")->required();
    propose->add_flag("--map", o.write_map, "Also write the objectness map as PGM");

    auto* eval = app.add_subcommand("eval", "Recall curves and timing over a dataset");
    add_shared(eval);
    add_model(eval);
    add_selection(eval);
    eval->add_option("--data", o.data, "Annotation JSON")->required();
    eval->add_option("--t-d", o.t_d, "Match IoU threshold")->check(CLI::Range(0.0, 1.0));
    eval->add_option("--sweep", o.sweep, "Comma-separated k or T_o values")->delimiter(',');
    eval->add_option("--proposals", o.proposals, "External proposals: CSV with an image column, or a directory");
    eval->add_option("--name", o.name, "Method name used in outputs");
    eval->add_option("--timing-images", o.timing_images, "Images used for timing")->check(CLI::PositiveNumber);
    eval->add_option("--timing-reps", o.timing_reps, "Timing repetitions (>= 3)")->check(CLI::Range(3, 1000));
    eval->add_flag("--no-timing", o.no_timing, "Skip the timing benchmark");

    auto* voc = app.add_subcommand("convert-voc", "Convert Pascal-VOC XML annotations");
    add_shared(voc);
    voc->add_option("--xml", o.xml_dir, "Directory of XML files")->required();
    voc->add_option("--images", o.image_dir, "Directory holding the images")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    omp_set_num_threads(static_cast<int>(o.workers));
    o.t_s_given = eval->get_option("--t-s")->count() > 0;

    try {
        if (*synth) return cmd_synth(o);
        if (*train) return cmd_train(o);
        if (*propose) return cmd_propose(o);
        if (*eval) return cmd_eval(o);
        if (*voc) return cmd_convert_voc(o);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "aborted: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
