#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "sonarprop/datagen.hpp"
#include "sonarprop/errors.hpp"
#include "sonarprop/synth.hpp"

using namespace sonarprop;

namespace {

GrayImage ramp(std::size_t w, std::size_t h) {
    GrayImage img(w, h);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) img.at(x, y) = static_cast<std::uint8_t>((x + 3 * y) % 251);
    return img;
}

std::tuple<int, int, int, int> key(const BoundingBox& b) { return {b.y, b.x, b.w, b.h}; }

}  // namespace

TEST_CASE("objectness from IoU with eps 0.2") {
    CHECK(objectness_from_iou(0.85) == 1.0);
    CHECK(objectness_from_iou(0.8) == 1.0);
    CHECK(objectness_from_iou(0.5) == 0.5);
    CHECK(objectness_from_iou(0.2) == 0.0);
    CHECK(objectness_from_iou(0.1) == 0.0);
    CHECK(objectness_from_iou(0.21) == doctest::Approx(0.21));
    CHECK(objectness_from_iou(1.0) == 1.0);
    CHECK(objectness_from_iou(0.0) == 0.0);
    CHECK_THROWS_AS(objectness_from_iou(1.5), InvalidInput);
    // Monotone and idempotent on its plateaus.
    double prev = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double o = objectness_from_iou(i / 100.0);
        CHECK(o >= prev);
        CHECK((o == 0.0 || o == 1.0 || o == doctest::Approx(i / 100.0)));
        prev = o;
    }
}

TEST_CASE("grid windows are fully contained and anchored at the origin") {
    const auto w = grid_windows(200, 100, 96, 4);
    CHECK(w.size() == 27 * 2);
    CHECK(w.front() == BoundingBox{0, 0, 96, 96});
    CHECK(w.back() == BoundingBox{104, 4, 96, 96});
    CHECK(grid_windows(95, 200, 96, 4).empty());
    CHECK_THROWS_AS(grid_windows(100, 100, 96, 0), InvalidInput);
}

TEST_CASE("positive windows agree with brute-force enumeration") {
    const GrayImage img = ramp(200, 200);
    const std::vector<BoundingBox> boxes{{10, 10, 90, 100}};
    const auto got = generate_positive_windows(img, boxes);

    // Enumerate every stride-4 window and apply the rule directly.
    std::map<std::tuple<int, int, int, int>, double> expected;
    double best = -1;
    BoundingBox best_win;
    for (int y = 0; y + 96 <= 200; y += 4)
        for (int x = 0; x + 96 <= 200; x += 4) {
            const BoundingBox w{x, y, 96, 96};
            const double v = iou(w, boxes[0]);
            if (v > best) {
                best = v;
                best_win = w;
            }
            if (v >= 0.5) expected[key(w)] = objectness_from_iou(v);
        }
    expected[key(best_win)] = objectness_from_iou(best);

    REQUIRE(got.size() == expected.size());
    CHECK(got.size() >= 5);
    for (std::size_t i = 0; i < got.size(); ++i) {
        const auto it = expected.find(key(got[i].window));
        REQUIRE(it != expected.end());
        CHECK(got[i].objectness == doctest::Approx(it->second));
        if (i > 0) CHECK(key(got[i - 1].window) < key(got[i].window));
        // Pixels copied from the window.
        CHECK(got[i].raw.size() == 96 * 96);
        CHECK(got[i].raw[97] == img.at(got[i].window.x + 1, got[i].window.y + 1));
    }
    CHECK(got[0].pixels().shape() == std::vector<std::size_t>{1, 96, 96});
}

TEST_CASE("overlapping boxes: a window chosen twice keeps the higher objectness") {
    const GrayImage img = ramp(200, 200);
    const std::vector<BoundingBox> boxes{{8, 8, 96, 96}, {12, 8, 96, 96}};
    const auto got = generate_positive_windows(img, boxes);
    std::set<std::tuple<int, int, int, int>> seen;
    for (const auto& p : got) {
        CHECK(seen.insert(key(p.window)).second);
        const double v = std::max(iou(p.window, boxes[0]), iou(p.window, boxes[1]));
        CHECK(p.objectness == doctest::Approx(objectness_from_iou(v)));
    }
}

TEST_CASE("negatives: max IoU bounded by eps, deterministic, exhaustion") {
    const GrayImage img = ramp(300, 250);
    const std::vector<BoundingBox> boxes{{100, 80, 90, 90}};
    const auto a = sample_negative_windows(img, boxes, 11);
    const auto b = sample_negative_windows(img, boxes, 11);
    REQUIRE(a.size() == 10);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].objectness == 0.0f);
        CHECK(iou(a[i].window, boxes[0]) <= 0.2);
        CHECK(a[i].window == b[i].window);
        CHECK(a[i].window.right() <= 300);
        CHECK(a[i].window.bottom() <= 250);
    }
    // A box covering a whole 96 x 96 image leaves no admissible window.
    CHECK_THROWS_AS(sample_negative_windows(ramp(96, 96), {{0, 0, 96, 96}}, 1), SamplingExhausted);
    // An image without objects yields windows anywhere.
    CHECK(sample_negative_windows(img, {}, 3).size() == 10);
}

TEST_CASE("dataset split partitions the images") {
    std::vector<Annotation> anns;
    for (std::uint64_t s = 0; s < 10; ++s) {
        SynthResult r = synth_sonar_image(240, 200, 1, s);
        r.annotation.file = "img" + std::to_string(s) + ".png";
        anns.push_back(std::move(r.annotation));
    }
    WindowOptions opt;
    opt.stride = 8;
    const PatchDataset ds = build_patch_dataset(anns, 0.7, 5, opt);
    CHECK(ds.train_images.size() == 7);
    CHECK(ds.validation_images.size() == 3);
    std::vector<std::size_t> all = ds.train_images;
    all.insert(all.end(), ds.validation_images.begin(), ds.validation_images.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < 10; ++i) CHECK(all[i] == i);
    const std::set<std::size_t> train_set(ds.train_images.begin(), ds.train_images.end());
    for (const auto& p : ds.train) CHECK(train_set.count(p.source_image) == 1);
    for (const auto& p : ds.validation) CHECK(train_set.count(p.source_image) == 0);

    const PatchDataset again = build_patch_dataset(anns, 0.7, 5, opt);
    CHECK(again.train_images == ds.train_images);
    REQUIRE(again.train.size() == ds.train.size());
    for (std::size_t i = 0; i < ds.train.size(); ++i) CHECK(again.train[i].raw == ds.train[i].raw);

    CHECK_THROWS_AS(build_patch_dataset({}, 0.7, 1), InvalidInput);
    Annotation no_pixels = anns[0];
    no_pixels.image = {};
    CHECK_THROWS_AS(build_patch_dataset({no_pixels}, 0.7, 1), InvalidInput);
}
