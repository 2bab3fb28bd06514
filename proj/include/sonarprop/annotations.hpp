#pragma once

// Annotation exchange format (one JSON document per dataset):
//
//   {"images": [{"file": "img_0000.pgm", "width": 480, "height": 320,
//                "boxes": [{"x": 10, "y": 20, "w": 80, "h": 90}]}]}
//
// "file" is relative to the JSON document's directory. Boxes must have
// positive extents and lie inside the image.

#include <filesystem>
#include <string>
#include <vector>

#include "sonarprop/geometry.hpp"
#include "sonarprop/image.hpp"

namespace sonarprop {

struct Annotation {
    std::string file;
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<BoundingBox> boxes;
    GrayImage image;  // empty unless pixels were loaded

    bool same_labels(const Annotation& other) const {
        return file == other.file && width == other.width && height == other.height && boxes == other.boxes;
    }
};

// Parses the document and, when load_pixels is set, reads every image.
// Malformed records raise ParseError with the record index; missing images
// raise IoError naming the file.
std::vector<Annotation> load_annotations(const std::filesystem::path& path, bool load_pixels = true);
std::vector<Annotation> parse_annotations(const std::string& json_text);

std::string annotations_to_json(const std::vector<Annotation>& annotations);
void save_annotations(const std::filesystem::path& path, const std::vector<Annotation>& annotations);

struct ConversionReport {
    std::size_t images = 0;
    std::size_t boxes = 0;
    std::size_t clipped_boxes = 0;
    std::size_t dropped_boxes = 0;
};

// Converts a directory of Pascal-VOC style XML files (the layout used by the
// public marine-debris forward-looking sonar release) into the exchange
// format. Mapping: filename -> file (resolved relative to image_dir), size ->
// width/height, bndbox -> x = xmin, y = ymin, w = xmax - xmin, h = ymax - ymin.
// Boxes are clipped to the image; boxes that vanish are dropped.
ConversionReport convert_voc_annotations(const std::filesystem::path& xml_dir,
                                         const std::filesystem::path& image_dir,
                                         const std::filesystem::path& out_json);

}  // namespace sonarprop
