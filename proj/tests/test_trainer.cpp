#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <omp.h>

#include "scratch_dir.hpp"
#include "sonarprop/errors.hpp"
#include "sonarprop/synth.hpp"
#include "sonarprop/trainer.hpp"

using namespace sonarprop;

namespace {

std::vector<LabeledPatch> sample_patches(std::size_t n) {
    const SynthResult r = synth_sonar_image(320, 240, 1, 21);
    WindowOptions opt;
    opt.stride = 16;
    opt.negatives = n;
    auto neg = sample_negative_windows(r.image, r.annotation.boxes, 3, opt);
    auto pos = generate_positive_windows(r.image, r.annotation.boxes, opt);
    std::vector<LabeledPatch> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(i % 2 == 0 && i / 2 < pos.size() ? pos[i / 2] : neg[i]);
    return out;
}

Parameters constant_grads(const Parameters& like, float value) {
    Parameters g = AdamState::zeros_like(like).first_moment;
    for (auto& p : g) {
        p.weights.fill(value);
        p.bias.fill(value);
    }
    return g;
}

}  // namespace

TEST_CASE("ADAM: zero gradients leave parameters unchanged") {
    Network net = build_fcn_tiny(1);
    const Parameters before = net.params;
    AdamState st = AdamState::zeros_like(net.params);
    adam_step(net.params, constant_grads(net.params, 0.0f), st, {});
    CHECK(net.params == before);
    CHECK(st.step == 1);
}

TEST_CASE("ADAM: first step moves each parameter by lr times the gradient sign") {
    // m_hat = g, v_hat = g^2 after bias correction, so the step is lr * g / (|g| + eps).
    Network net = build_fcn_tiny(1);
    const Parameters before = net.params;
    AdamState st = AdamState::zeros_like(net.params);
    TrainConfig cfg;
    Parameters g = constant_grads(net.params, 0.0f);
    for (std::size_t i = 0; i < g[0].weights.size(); ++i) g[0].weights[i] = (i % 2 ? 1.0f : -1.0f) * 0.01f * (1 + i);
    adam_step(net.params, g, st, cfg);
    for (std::size_t i = 0; i < g[0].weights.size(); ++i) {
        const double gi = g[0].weights[i];
        const double expected = before[0].weights[i] - 0.01 * gi / (std::abs(gi) + 1e-8);
        CHECK(net.params[0].weights[i] == doctest::Approx(expected).epsilon(1e-5));
    }
    // Second identical step: moments equal g and g^2 again, same displacement.
    const Parameters mid = net.params;
    adam_step(net.params, g, st, cfg);
    CHECK(net.params[0].weights[3] - mid[0].weights[3] == doctest::Approx(mid[0].weights[3] - before[0].weights[3]).epsilon(1e-3));
}

TEST_CASE("ADAM: non-finite gradient aborts without touching parameters") {
    Network net = build_fcn_tiny(1);
    const Parameters before = net.params;
    AdamState st = AdamState::zeros_like(net.params);
    Parameters g = constant_grads(net.params, 0.1f);
    g[5].weights[7] = std::numeric_limits<float>::quiet_NaN();
    try {
        adam_step(net.params, g, st, {});
        FAIL("expected TrainingDiverged");
    } catch (const TrainingDiverged& e) {
        CHECK(std::string(e.what()).find("layer 5") != std::string::npos);
    }
    CHECK(net.params == before);
    CHECK(st.step == 0);
}

TEST_CASE("batch gradient is the mean of per-sample gradients and thread-count independent") {
    const Network net = build_fcn_tiny(2);
    const auto patches = sample_patches(6);
    std::vector<const LabeledPatch*> batch;
    for (const auto& p : patches) batch.push_back(&p);
    const BatchGradient bg = batch_gradient(net, batch, 4);

    Parameters sum = AdamState::zeros_like(net.params).first_moment;
    double loss = 0;
    for (const auto& p : patches) {
        const ForwardTrace tr = forward_trace(net, p.pixels());
        const float d = tr.output[0] - p.objectness;
        loss += static_cast<double>(d) * d;
        const Parameters g = backward(net, tr, Tensor({1}, 2.0f * d));
        for (std::size_t l = 0; l < g.size(); ++l)
            for (std::size_t i = 0; i < g[l].weights.size(); ++i) sum[l].weights[i] += g[l].weights[i];
    }
    CHECK(bg.loss == doctest::Approx(loss / 6).epsilon(1e-5));
    for (std::size_t l = 0; l < sum.size(); ++l)
        for (std::size_t i = 0; i < sum[l].weights.size(); i += 97)
            CHECK(bg.grads[l].weights[i] == doctest::Approx(sum[l].weights[i] / 6).epsilon(1e-4).scale(1e-6));

    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const BatchGradient one = batch_gradient(net, batch, 4);
    omp_set_num_threads(4);
    const BatchGradient four = batch_gradient(net, batch, 4);
    omp_set_num_threads(saved);
    CHECK(one.grads == four.grads);
    CHECK(one.loss == four.loss);
}

TEST_CASE("training overfits a single sample and is reproducible") {
    const auto patches = sample_patches(2);
    std::vector<LabeledPatch> one{patches[0]};
    one[0].objectness = 1.0f;
    TrainConfig cfg;
    cfg.batch_size = 1;
    cfg.max_epochs = 60;
    cfg.patience = 60;
    std::size_t calls = 0;
    cfg.on_epoch = [&](const EpochRecord& r) { CHECK(r.epoch == ++calls); };
    const Network init = build_fcn_tiny(3);
    const TrainResult r = train(init, one, one, cfg);
    CHECK(calls == r.history.size());
    CHECK(r.best_val_mse < 1e-3);
    CHECK(evaluate_mse(r.best, one) == doctest::Approx(r.best_val_mse).epsilon(1e-9));

    cfg.on_epoch = nullptr;
    cfg.max_epochs = 5;
    const TrainResult a = train(init, patches, patches, cfg), b = train(init, patches, patches, cfg);
    CHECK(a.best.params == b.best.params);
    CHECK(a.history.size() == b.history.size());
}

TEST_CASE("early stopping keeps the best epoch and stops after patience") {
    const auto patches = sample_patches(4);
    TrainConfig cfg;
    cfg.batch_size = 2;
    cfg.max_epochs = 30;
    cfg.patience = 2;
    cfg.learning_rate = 0.05f;
    const TrainResult r = train(build_fcn_tiny(5), {patches[0], patches[1]}, {patches[2], patches[3]}, cfg);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& h : r.history) best = std::min(best, h.val_mse);
    CHECK(r.best_val_mse == best);
    CHECK(r.history[r.best_epoch - 1].val_mse == best);
    if (r.early_stopped)
        CHECK(r.history.size() == r.best_epoch + cfg.patience);
    else
        CHECK(r.history.size() == cfg.max_epochs);
    CHECK(evaluate_mse(r.best, {patches[2], patches[3]}) == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("a tiny learning rate barely moves the parameters") {
    const auto patches = sample_patches(2);
    TrainConfig cfg;
    cfg.learning_rate = 1e-4f;
    cfg.max_epochs = 1;
    cfg.batch_size = 2;
    const Network init = build_fcn_tiny(6);
    const TrainResult r = train(init, patches, patches, cfg);
    for (std::size_t l = 0; l < init.params.size(); ++l)
        for (std::size_t i = 0; i < init.params[l].weights.size(); ++i)
            CHECK(std::abs(r.best.params[l].weights[i] - init.params[l].weights[i]) <= 1.0001e-4f);
}

TEST_CASE("configuration and input validation") {
    const auto patches = sample_patches(2);
    TrainConfig cfg;
    cfg.learning_rate = 0.0f;
    CHECK_THROWS_AS(train(build_fcn_tiny(), patches, patches, cfg), InvalidInput);
    cfg = {};
    cfg.patience = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    CHECK_THROWS_AS(train(build_fcn_tiny(), {}, patches, {}), InvalidInput);
    CHECK_THROWS_AS(train(build_fcn_tiny(), patches, {}, {}), InvalidInput);
    CHECK_THROWS_AS(evaluate_mse(build_fcn_tiny(), {}), InvalidInput);
}

TEST_CASE("history CSV") {
    ScratchDir dir("hist");
    write_history_csv(dir / "h.csv", {{1, 0.5, 0.25}, {2, 0.125, 0.0625}});
    std::ifstream is(dir / "h.csv");
    std::string line;
    std::getline(is, line);
    CHECK(line == "epoch,train_mse,val_mse");
    std::getline(is, line);
    CHECK(line == "1,0.5,0.25");
}
