#include "sonarprop/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "sonarprop/errors.hpp"

namespace sonarprop {

using nlohmann::json;

namespace {

int int_field(const json& obj, const char* key, std::size_t record) {
    if (!obj.contains(key) || !obj[key].is_number_integer())
        throw ParseError(std::string("missing or non-integer field '") + key + "'", record);
    return obj[key].get<int>();
}

}  // namespace

std::vector<Annotation> parse_annotations(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), 0);
    }
    if (!doc.is_object() || !doc.contains("images") || !doc["images"].is_array())
        throw ParseError("annotation document needs an 'images' array", 0);
    std::vector<Annotation> out;
    const auto& images = doc["images"];
    for (std::size_t i = 0; i < images.size(); ++i) {
        const json& rec = images[i];
        if (!rec.is_object()) throw ParseError("image record is not an object", i);
        Annotation a;
        if (!rec.contains("file") || !rec["file"].is_string()) throw ParseError("missing 'file'", i);
        a.file = rec["file"].get<std::string>();
        const int w = int_field(rec, "width", i);
        const int h = int_field(rec, "height", i);
        if (w <= 0 || h <= 0) throw ParseError("non-positive image extent", i);
        a.width = static_cast<std::size_t>(w);
        a.height = static_cast<std::size_t>(h);
        if (!rec.contains("boxes") || !rec["boxes"].is_array()) throw ParseError("missing 'boxes' array", i);
        for (const json& b : rec["boxes"]) {
            if (!b.is_object()) throw ParseError("box is not an object", i);
            BoundingBox box{int_field(b, "x", i), int_field(b, "y", i), int_field(b, "w", i), int_field(b, "h", i)};
            if (box.w <= 0 || box.h <= 0) throw ParseError("box with non-positive extent", i);
            if (box.x < 0 || box.y < 0 || box.right() > w || box.bottom() > h)
                throw ParseError("box exceeds image bounds in '" + a.file + "'", i);
            a.boxes.push_back(box);
        }
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<Annotation> load_annotations(const std::filesystem::path& path, bool load_pixels) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open annotation file: " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    auto annotations = parse_annotations(ss.str());
    if (load_pixels) {
        const auto base = path.parent_path();
        for (auto& a : annotations) {
            a.image = read_image(base / a.file);
            if (a.image.width != a.width || a.image.height != a.height)
                throw IoError("image size does not match annotation: " + (base / a.file).string());
        }
    }
    return annotations;
}

std::string annotations_to_json(const std::vector<Annotation>& annotations) {
    json images = json::array();
    for (const auto& a : annotations) {
        json boxes = json::array();
        for (const auto& b : a.boxes) boxes.push_back({{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}});
        images.push_back({{"file", a.file}, {"width", a.width}, {"height", a.height}, {"boxes", boxes}});
    }
    return json{{"images", images}}.dump(1) + "\n";
}

void save_annotations(const std::filesystem::path& path, const std::vector<Annotation>& annotations) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write annotation file: " + path.string());
    os << annotations_to_json(annotations);
    if (!os) throw IoError("failed writing annotation file: " + path.string());
}

namespace {

std::string first_tag(const std::string& text, const std::string& tag) {
    const std::regex re("<" + tag + R"(>\s*([^<]*?)\s*</)" + tag + ">");
    std::smatch m;
    if (std::regex_search(text, m, re)) return m[1].str();
    return {};
}

int number_tag(const std::string& text, const std::string& tag, std::size_t record) {
    const std::string v = first_tag(text, tag);
    try {
        return static_cast<int>(std::lround(std::stod(v)));
    } catch (const std::exception&) {
        throw ParseError("missing numeric <" + tag + ">", record);
    }
}

}  // namespace

ConversionReport convert_voc_annotations(const std::filesystem::path& xml_dir,
                                         const std::filesystem::path& image_dir,
                                         const std::filesystem::path& out_json) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(xml_dir))
        if (entry.path().extension() == ".xml") files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    ConversionReport report;
    std::vector<Annotation> annotations;
    const auto out_dir = out_json.parent_path().empty() ? std::filesystem::path(".") : out_json.parent_path();
    const std::regex object_re(R"(<object>([\s\S]*?)</object>)");
    for (std::size_t i = 0; i < files.size(); ++i) {
        std::ifstream is(files[i]);
        if (!is) throw IoError("cannot open " + files[i].string());
        std::stringstream ss;
        ss << is.rdbuf();
        const std::string text = ss.str();
        Annotation a;
        std::string name = first_tag(text, "filename");
        if (name.empty()) name = files[i].stem().string() + ".png";
        a.file = std::filesystem::relative(image_dir / name, out_dir).generic_string();
        a.width = static_cast<std::size_t>(number_tag(text, "width", i));
        a.height = static_cast<std::size_t>(number_tag(text, "height", i));
        for (std::sregex_iterator it(text.begin(), text.end(), object_re), end; it != end; ++it) {
            const std::string obj = (*it)[1].str();
            int x0 = number_tag(obj, "xmin", i), y0 = number_tag(obj, "ymin", i);
            int x1 = number_tag(obj, "xmax", i), y1 = number_tag(obj, "ymax", i);
            const int cx0 = std::clamp(x0, 0, static_cast<int>(a.width));
            const int cy0 = std::clamp(y0, 0, static_cast<int>(a.height));
            const int cx1 = std::clamp(x1, 0, static_cast<int>(a.width));
            const int cy1 = std::clamp(y1, 0, static_cast<int>(a.height));
            if (cx1 <= cx0 || cy1 <= cy0) {
                ++report.dropped_boxes;
                continue;
            }
            if (cx0 != x0 || cy0 != y0 || cx1 != x1 || cy1 != y1) ++report.clipped_boxes;
            a.boxes.push_back({cx0, cy0, cx1 - cx0, cy1 - cy0});
            ++report.boxes;
        }
        annotations.push_back(std::move(a));
        ++report.images;
    }
    save_annotations(out_json, annotations);
    return report;
}

}  // namespace sonarprop
