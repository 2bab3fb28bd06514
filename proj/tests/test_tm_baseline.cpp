#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "scratch_dir.hpp"
#include "sonarprop/errors.hpp"
#include "sonarprop/synth.hpp"
#include "sonarprop/tm_baseline.hpp"
#include "sonarprop/weights_io.hpp"

using namespace sonarprop;

namespace {

Tensor random_patch(std::mt19937_64& rng) { return oracle::random_tensor({1, 96, 96}, rng, 0.0f, 1.0f); }

// Smooth blob plus noise so that correlations span a useful range.
Tensor blob_patch(std::mt19937_64& rng, double cx, double cy) {
    Tensor t = oracle::random_tensor({1, 96, 96}, rng, 0.0f, 0.3f);
    for (std::size_t y = 0; y < 96; ++y)
        for (std::size_t x = 0; x < 96; ++x)
            t.at(0, y, x) += static_cast<float>(0.6 * std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / 300.0));
    return t;
}

}  // namespace

TEST_CASE("identical template scores 1, negated template scores 0") {
    std::mt19937_64 rng(1);
    const Tensor p = random_patch(rng);
    CHECK(tm_objectness(TemplateBank({p}), p) == doctest::Approx(1.0).epsilon(1e-6));
    Tensor neg = p;
    for (float& v : neg.values()) v = 1.0f - v;
    CHECK(tm_objectness(TemplateBank({neg}), p) == 0.0f);
    CHECK(tm_objectness(TemplateBank({Tensor({1, 96, 96}, 0.4f)}), p) == 0.0f);
}

TEST_CASE("normalized cross-correlation matches the double-precision loop oracle") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 50; ++i) {
        const Tensor a = blob_patch(rng, 30 + i, 48), b = blob_patch(rng, 48, 20 + i);
        CHECK(std::abs(xcorr2d_normalized(a, b) - oracle::pearson(a, b)) <= 1e-6);
    }
}

TEST_CASE("tm objectness is the max correlation over the bank, clamped at 0") {
    std::mt19937_64 rng(3);
    std::vector<Tensor> templates;
    for (int i = 0; i < 6; ++i) templates.push_back(blob_patch(rng, 20 + 10 * i, 40));
    const Tensor patch = blob_patch(rng, 45, 45);
    double best = 0.0;
    for (const auto& t : templates) best = std::max(best, oracle::pearson(patch, t));
    CHECK(std::abs(tm_objectness(TemplateBank(templates), patch) - best) <= 1e-6);
}

TEST_CASE("adding templates never lowers the score") {
    std::mt19937_64 rng(4);
    const Tensor patch = blob_patch(rng, 50, 50);
    TemplateBank bank;
    float prev = 0.0f;
    for (int i = 0; i < 8; ++i) {
        bank.add(blob_patch(rng, 10 + 10 * i, 70 - 5 * i));
        const float s = tm_objectness(bank, patch);
        CHECK(s >= prev);
        prev = s;
    }
}

TEST_CASE("score is invariant to positive affine intensity changes") {
    std::mt19937_64 rng(5);
    const Tensor templ = blob_patch(rng, 40, 50), patch = blob_patch(rng, 45, 50);
    Tensor scaled = patch;
    for (float& v : scaled.values()) v = 0.5f * v + 0.2f;
    const TemplateBank bank({templ});
    CHECK(tm_objectness(bank, scaled) == doctest::Approx(tm_objectness(bank, patch)).epsilon(1e-5));
}

TEST_CASE("fast map agrees with per-window scoring") {
    const SynthResult r = synth_sonar_image(224, 200, 1, 6);
    std::mt19937_64 rng(6);
    std::vector<Tensor> templates;
    for (int i = 0; i < 5; ++i) templates.push_back(blob_patch(rng, 30 + 8 * i, 50));
    templates.push_back(crop_tensor(r.image, 40, 32, 96, 96));
    const TemplateBank bank(templates);
    const ObjectnessMap m = objectness_map_tm(bank, r.image, 4);
    REQUIRE(m.rows() == 27);
    REQUIRE(m.cols() == 33);
    float worst = 0.0f;
    for (std::size_t row = 0; row < m.rows(); row += 3)
        for (std::size_t col = 0; col < m.cols(); col += 2) {
            const float direct = tm_objectness(bank, crop_tensor(r.image, col * 4, row * 4, 96, 96));
            worst = std::max(worst, std::abs(direct - m.grid.at(0, row, col)));
        }
    CHECK(worst <= 1e-4f);
    CHECK(m.grid.at(0, 8, 10) == doctest::Approx(1.0).epsilon(1e-4));
    // All-black region: zero variance windows score 0.
    const ObjectnessMap black = objectness_map_tm(bank, GrayImage(120, 100), 4);
    for (float v : black.grid.values()) CHECK(v == 0.0f);
}

TEST_CASE("template selection draws distinct positives deterministically") {
    std::vector<LabeledPatch> set(20);
    for (std::size_t i = 0; i < set.size(); ++i) {
        set[i].raw.assign(96 * 96, static_cast<std::uint8_t>(i * 10));
        set[i].raw[i] = 255;
        set[i].objectness = i % 2 ? 0.6f : 0.0f;
    }
    const TemplateBank a = select_templates(set, 4, 9), b = select_templates(set, 4, 9);
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a.templates()[i] == b.templates()[i]);
        // Only positives (odd intensities) are drawn.
        CHECK(static_cast<int>(std::lround(a.templates()[i][96 * 96 - 1] * 255)) % 20 == 10);
        for (std::size_t j = 0; j < i; ++j) CHECK_FALSE(a.templates()[i] == a.templates()[j]);
    }
    CHECK_THROWS_AS(select_templates(set, 11, 1), InvalidInput);
    CHECK_THROWS_AS(select_templates(set, 0, 1), InvalidInput);
    CHECK_THROWS_AS(tm_objectness(TemplateBank(), Tensor({1, 96, 96})), InvalidInput);
    CHECK_THROWS_AS(TemplateBank({Tensor({1, 32, 32})}), InvalidInput);
}

TEST_CASE("template bank save and load") {
    ScratchDir dir("tm");
    std::mt19937_64 rng(7);
    const TemplateBank bank({random_patch(rng), random_patch(rng), random_patch(rng)});
    save_templates(dir / "t.spnw", bank);
    const TemplateBank back = load_templates(dir / "t.spnw");
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(back.templates()[i] == bank.templates()[i]);
    CHECK(back.normalized() == bank.normalized());
    save_network(dir / "n.spnw", build_fcn_tiny());
    CHECK_THROWS_AS(load_templates(dir / "n.spnw"), ParseError);
}
