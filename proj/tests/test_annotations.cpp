#include <doctest.h>

#include <fstream>

#include "scratch_dir.hpp"
#include "sonarprop/annotations.hpp"
#include "sonarprop/errors.hpp"

using namespace sonarprop;

TEST_CASE("JSON round trip with pixels") {
    ScratchDir dir("ann");
    GrayImage img(20, 10, 7);
    write_image(dir / "a.pgm", img);
    write_image(dir / "b.png", GrayImage(8, 8, 200));
    std::vector<Annotation> anns(2);
    anns[0] = {"a.pgm", 20, 10, {{1, 2, 3, 4}, {0, 0, 20, 10}}, {}};
    anns[1] = {"b.png", 8, 8, {}, {}};
    save_annotations(dir / "ann.json", anns);
    const auto back = load_annotations(dir / "ann.json");
    REQUIRE(back.size() == 2);
    CHECK(back[0].same_labels(anns[0]));
    CHECK(back[1].same_labels(anns[1]));
    CHECK(back[0].image == img);
    CHECK(back[1].image.at(3, 3) == 200);
    CHECK(load_annotations(dir / "ann.json", false)[0].image.empty());
}

TEST_CASE("empty and malformed documents") {
    CHECK(parse_annotations(R"({"images": []})").empty());
    CHECK_THROWS_AS(parse_annotations("{"), ParseError);
    CHECK_THROWS_AS(parse_annotations(R"({"pictures": []})"), ParseError);
    try {
        parse_annotations(R"({"images": [{"file": "a", "width": 10, "height": 10, "boxes": []},
                                         {"file": "b", "width": 10, "height": 10,
                                          "boxes": [{"x": 5, "y": 5, "w": 6, "h": 2}]}]})");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.record() == 1);
    }
    CHECK_THROWS_AS(parse_annotations(R"({"images": [{"file": "a", "width": 10, "height": 10,
                                          "boxes": [{"x": 0, "y": 0, "w": 0, "h": 2}]}]})"),
                    ParseError);
    CHECK_THROWS_AS(parse_annotations(R"({"images": [{"width": 10, "height": 10, "boxes": []}]})"), ParseError);
}

TEST_CASE("missing or mismatched image files raise IoError") {
    ScratchDir dir("ann");
    save_annotations(dir / "ann.json", {{"gone.png", 10, 10, {}, {}}});
    CHECK_THROWS_AS(load_annotations(dir / "ann.json"), IoError);
    write_image(dir / "small.pgm", GrayImage(4, 4));
    save_annotations(dir / "ann.json", {{"small.pgm", 10, 10, {}, {}}});
    CHECK_THROWS_AS(load_annotations(dir / "ann.json"), IoError);
    CHECK_THROWS_AS(load_annotations(dir / "nothing.json"), IoError);
}

TEST_CASE("VOC conversion maps corners to extents and clips") {
    ScratchDir dir("voc");
    std::filesystem::create_directories(dir / "xml");
    std::filesystem::create_directories(dir / "img");
    write_image(dir / "img/s0.png", GrayImage(50, 40, 1));
    std::ofstream(dir / "xml/s0.xml") << R"(<annotation>
  <filename>s0.png</filename>
  <size><width>50</width><height>40</height><depth>1</depth></size>
  <object><name>bottle</name><bndbox><xmin>5</xmin><ymin>6</ymin><xmax>25</xmax><ymax>16</ymax></bndbox></object>
  <object><name>can</name><bndbox><xmin>40</xmin><ymin>30</ymin><xmax>60</xmax><ymax>45</ymax></bndbox></object>
  <object><name>tire</name><bndbox><xmin>55</xmin><ymin>0</ymin><xmax>70</xmax><ymax>10</ymax></bndbox></object>
</annotation>)";
    const ConversionReport r = convert_voc_annotations(dir / "xml", dir / "img", dir / "out.json");
    CHECK(r.images == 1);
    CHECK(r.boxes == 2);
    CHECK(r.clipped_boxes == 1);
    CHECK(r.dropped_boxes == 1);
    const auto anns = load_annotations(dir / "out.json");
    REQUIRE(anns.size() == 1);
    CHECK(anns[0].width == 50);
    CHECK(anns[0].boxes == std::vector<BoundingBox>{{5, 6, 20, 10}, {40, 30, 10, 10}});
    CHECK(anns[0].image.width == 50);
}
