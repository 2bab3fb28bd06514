#include <doctest.h>

#include <fstream>
#include <random>

#include "scratch_dir.hpp"
#include "sonarprop/errors.hpp"
#include "sonarprop/image.hpp"

using namespace sonarprop;

namespace {

GrayImage noise_image(std::size_t w, std::size_t h, unsigned seed) {
    std::mt19937 rng(seed);
    GrayImage img(w, h);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() & 0xff);
    return img;
}

}  // namespace

TEST_CASE("PGM and PNG round trips") {
    ScratchDir dir("img");
    const GrayImage img = noise_image(37, 21, 1);
    for (const char* name : {"a.pgm", "a.png"}) {
        write_image(dir / name, img);
        CHECK(read_image(dir / name) == img);
    }
}

TEST_CASE("ASCII PGM with comments") {
    ScratchDir dir("img");
    std::ofstream(dir / "a.pgm") << "P2\n# comment\n3 2\n255\n0 1 2\n253 254 255\n";
    const GrayImage img = read_image(dir / "a.pgm");
    REQUIRE(img.width == 3);
    REQUIRE(img.height == 2);
    CHECK(img.at(2, 1) == 255);
    CHECK(img.at(1, 0) == 1);
}

TEST_CASE("read errors") {
    ScratchDir dir("img");
    CHECK_THROWS_AS(read_image(dir / "none.png"), IoError);
    std::ofstream(dir / "x.pgm") << "P6\n1 1\n255\n";
    CHECK_THROWS_AS(read_image(dir / "x.pgm"), IoError);
    std::ofstream(dir / "t.pgm", std::ios::binary) << "P5\n4 4\n255\nab";
    CHECK_THROWS_AS(read_image(dir / "t.pgm"), IoError);
}

TEST_CASE("tensor conversion and crops") {
    GrayImage img(4, 3);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i * 20);
    const Tensor t = to_tensor(img);
    CHECK(t.shape() == std::vector<std::size_t>{1, 3, 4});
    CHECK(t.at(0, 2, 3) == doctest::Approx(220.0 / 255.0));
    const Tensor c = crop_tensor(img, 1, 1, 2, 2);
    CHECK(c.shape() == std::vector<std::size_t>{1, 2, 2});
    CHECK(c[0] == t.at(0, 1, 1));
    CHECK(c[3] == t.at(0, 2, 2));
    CHECK_THROWS_AS(crop_tensor(img, 3, 0, 2, 2), InvalidInput);
}

TEST_CASE("map quantization stays within half a level") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Tensor m({1, 9, 11});
    for (float& v : m.values()) v = u(rng);
    const GrayImage q = quantize_map(m);
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(std::abs(q.pixels[i] / 255.0f - m[i]) <= 0.5f / 255.0f + 1e-6f);
    CHECK_THROWS_AS(quantize_map(Tensor({2, 3, 3})), InvalidInput);
}
