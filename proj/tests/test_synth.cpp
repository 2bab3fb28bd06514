#include <doctest.h>

#include <cmath>

#include "sonarprop/errors.hpp"
#include "sonarprop/synth.hpp"

using namespace sonarprop;

TEST_CASE("zero objects gives an image without boxes") {
    const SynthResult r = synth_sonar_image(320, 240, 0, 1);
    CHECK(r.annotation.boxes.empty());
    CHECK(r.image.width == 320);
    CHECK(r.image.height == 240);
    CHECK_FALSE(r.reduced);
}

TEST_CASE("same seed, same image; different seed, different image") {
    const SynthResult a = synth_sonar_image(320, 240, 2, 9), b = synth_sonar_image(320, 240, 2, 9);
    CHECK(a.image == b.image);
    CHECK(a.annotation.boxes == b.annotation.boxes);
    CHECK_FALSE(synth_sonar_image(320, 240, 2, 10).image == a.image);
}

TEST_CASE("objects lie in the fan, do not overlap, and stand out from the seabed") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const SynthResult r = synth_sonar_image(480, 320, 1 + seed % 3, seed);
        const auto& boxes = r.annotation.boxes;
        CHECK(boxes.size() + (r.reduced ? 1 : 0) >= 1);
        CHECK(r.annotation.same_labels(r.annotation));

        // Background statistics over fan pixels away from every box.
        double sum = 0, sq = 0, n = 0;
        for (std::size_t y = 0; y < r.image.height; ++y)
            for (std::size_t x = 0; x < r.image.width; ++x) {
                if (!r.fan.contains(x + 0.5, y + 0.5)) {
                    CHECK(r.image.at(x, y) == 0);
                    continue;
                }
                bool near = false;
                for (const auto& b : boxes)
                    near = near || (static_cast<int>(x) >= b.x - 4 && static_cast<int>(x) < b.right() + 4 &&
                                    static_cast<int>(y) >= b.y - 4 && static_cast<int>(y) < b.bottom() + 200);
                if (near) continue;
                const double v = r.image.at(x, y);
                sum += v;
                sq += v * v;
                ++n;
            }
        const double mean = sum / n, sd = std::sqrt(sq / n - mean * mean);

        for (std::size_t i = 0; i < boxes.size(); ++i) {
            const BoundingBox& b = boxes[i];
            CHECK(b.w >= 36);
            CHECK(b.h >= 36);
            CHECK(r.fan.contains(b.x + 0.5, b.y + 0.5));
            CHECK(r.fan.contains(b.right() - 0.5, b.bottom() - 0.5));
            for (std::size_t j = i + 1; j < boxes.size(); ++j) CHECK(iou(b, boxes[j]) == 0.0);
            // Central 40% of the box lies inside the blob.
            double c = 0, cn = 0;
            for (int y = b.y + 3 * b.h / 10; y < b.y + 7 * b.h / 10; ++y)
                for (int x = b.x + 3 * b.w / 10; x < b.x + 7 * b.w / 10; ++x) {
                    c += r.image.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
                    ++cn;
                }
            CHECK(c / cn - mean >= 3.0 * sd);
            // Whole box, blob edges and corners included.
            double w = 0, wn = 0;
            for (int y = b.y; y < b.bottom(); ++y)
                for (int x = b.x; x < b.right(); ++x) {
                    w += r.image.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
                    ++wn;
                }
            CHECK(w / wn - mean >= 3.0 * sd);
        }
    }
}

TEST_CASE("small extents are rejected") { CHECK_THROWS_AS(synth_sonar_image(100, 300, 1, 1), InvalidInput); }

TEST_CASE("dataset helper: names, object counts, determinism") {
    const auto a = synth_dataset(6, 240, 200, 4, 1, 2), b = synth_dataset(6, 240, 200, 4, 1, 2);
    REQUIRE(a.size() == 6);
    CHECK(a[0].file == "img_0000.png");
    CHECK(a[5].file == "img_0005.png");
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].same_labels(b[i]));
        CHECK(a[i].image == b[i].image);
        CHECK(a[i].boxes.size() <= 2);
        CHECK(a[i].width == 240);
    }
    CHECK(synth_dataset(0, 240, 200, 1).empty());
    CHECK_THROWS_AS(synth_dataset(2, 240, 200, 1, 3, 2), InvalidInput);
    CHECK_THROWS_AS(synth_dataset(2, 100, 200, 1), InvalidInput);
}
