#include <doctest.h>

#include <fstream>

#include "scratch_dir.hpp"
#include "sonarprop/errors.hpp"
#include "sonarprop/weights_io.hpp"

using namespace sonarprop;

TEST_CASE("network round trip is bit exact") {
    ScratchDir dir("wio");
    for (const Network& net : {build_cnn(4), build_fcn_tiny(4), fc_to_conv(build_fcn_tiny(4))}) {
        save_network(dir / "n.spnw", net);
        const Network back = load_network(dir / "n.spnw");
        CHECK(back.spec.layers == net.spec.layers);
        CHECK(back.params == net.params);
    }
}

TEST_CASE("file starts with the magic and layer count") {
    ScratchDir dir("wio");
    save_network(dir / "n.spnw", build_fcn_tiny());
    std::ifstream is(dir / "n.spnw", std::ios::binary);
    char head[9];
    is.read(head, 9);
    CHECK(std::string(head, 5) == "SPNW1");
    CHECK(static_cast<unsigned char>(head[5]) == 12);  // fcn tiny has 12 layers
    CHECK(head[6] == 0);
}

TEST_CASE("template records are rejected as networks") {
    ScratchDir dir("wio");
    WeightRecord r;
    r.kind = kTemplatesKind;
    r.weights = Tensor({2, 1, 96, 96}, 0.5f);
    write_records(dir / "t.spnw", {r});
    CHECK(read_records(dir / "t.spnw").size() == 1);
    CHECK_THROWS_AS(load_network(dir / "t.spnw"), ParseError);
}

TEST_CASE("malformed files") {
    ScratchDir dir("wio");
    CHECK_THROWS_AS(load_network(dir / "missing.spnw"), IoError);

    std::ofstream(dir / "bad.spnw") << "NOPE!";
    CHECK_THROWS_AS(load_network(dir / "bad.spnw"), ParseError);

    // Dense layer whose weights disagree with the declared units.
    WeightRecord dense;
    dense.kind = static_cast<std::uint32_t>(LayerKind::dense);
    dense.attrs = {3};
    dense.weights = Tensor({2, 5});
    dense.bias = Tensor({2});
    write_records(dir / "shape.spnw", {dense});
    CHECK_THROWS_AS(load_network(dir / "shape.spnw"), ParseError);

    save_network(dir / "ok.spnw", build_fcn_tiny());
    std::filesystem::resize_file(dir / "ok.spnw", std::filesystem::file_size(dir / "ok.spnw") - 7);
    CHECK_THROWS_AS(load_network(dir / "ok.spnw"), ParseError);
}
