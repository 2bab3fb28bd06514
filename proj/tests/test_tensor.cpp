#include <doctest.h>

#include <cmath>
#include <limits>

#include "sonarprop/errors.hpp"
#include "sonarprop/tensor.hpp"

using namespace sonarprop;

TEST_CASE("data length equals the product of extents") {
    Tensor t({2, 3, 4});
    CHECK(t.size() == 24);
    CHECK(t.rank() == 3);
    CHECK(t.dim(1) == 3);
    CHECK(element_count({2, 3, 4}) == 24);
    CHECK(element_count({}) == 0);
    CHECK(Tensor().empty());
}

TEST_CASE("constructor rejects bad shapes and lengths") {
    CHECK_THROWS_AS(Tensor({2, 0}), InvalidInput);
    CHECK_THROWS_AS(Tensor({1, 1, 1, 1, 1}), InvalidInput);
    CHECK_THROWS_AS(Tensor(std::vector<std::size_t>{2, 2}, std::vector<float>(3)), InvalidInput);
}

TEST_CASE("at() indexes channel-major row-major") {
    Tensor t({2, 2, 3});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(i);
    CHECK(t.at(1, 0, 2) == 8.0f);
    CHECK(t.at(0, 1, 0) == 3.0f);
}

TEST_CASE("reshape keeps data and checks the count") {
    Tensor t({2, 6}, 1.5f);
    const Tensor r = t.reshaped({3, 4});
    CHECK(r.dim(0) == 3);
    CHECK(r[11] == 1.5f);
    CHECK_THROWS_AS(t.reshaped({5}), InvalidInput);
}

TEST_CASE("finiteness check") {
    Tensor t({3});
    CHECK(t.all_finite());
    t[1] = std::numeric_limits<float>::quiet_NaN();
    CHECK_FALSE(t.all_finite());
    t[1] = std::numeric_limits<float>::infinity();
    CHECK_FALSE(t.all_finite());
}

TEST_CASE("shape string") { CHECK(shape_string({1, 96, 96}) == "[1x96x96]"); }
