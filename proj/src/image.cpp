#include "sonarprop/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "sonarprop/errors.hpp"

namespace sonarprop {

namespace {

std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

// Next whitespace-delimited PGM header token, skipping # comments.
std::string pgm_token(std::istream& is) {
    std::string tok;
    int ch;
    while ((ch = is.get()) != EOF) {
        if (ch == '#') {
            while ((ch = is.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open image: " + path.string());
    const std::string magic = pgm_token(is);
    if (magic != "P5" && magic != "P2") throw IoError("not a PGM image: " + path.string());
    std::size_t w = 0, h = 0, maxval = 0;
    try {
        w = std::stoul(pgm_token(is));
        h = std::stoul(pgm_token(is));
        maxval = std::stoul(pgm_token(is));
    } catch (const std::exception&) {
        throw IoError("malformed PGM header: " + path.string());
    }
    if (w == 0 || h == 0 || maxval == 0 || maxval > 255) throw IoError("unsupported PGM (8-bit only): " + path.string());
    GrayImage img(w, h);
    if (magic == "P5") {
        if (!is.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(w * h)))
            throw IoError("truncated PGM data: " + path.string());
    } else {
        for (auto& p : img.pixels) {
            const std::string t = pgm_token(is);
            if (t.empty()) throw IoError("truncated PGM data: " + path.string());
            p = static_cast<std::uint8_t>(std::stoul(t));
        }
    }
    if (maxval != 255)
        for (auto& p : img.pixels) p = static_cast<std::uint8_t>(std::lround(p * 255.0 / maxval));
    return img;
}

GrayImage read_png(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw IoError("cannot read PNG " + path.string() + ": " + image.message);
    image.format = PNG_FORMAT_GRAY;
    GrayImage img(image.width, image.height);
    if (!png_image_finish_read(&image, nullptr, img.pixels.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
    }
    return img;
}

}  // namespace

GrayImage read_image(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("image file not found: " + path.string());
    const std::string ext = lower_extension(path);
    if (ext == ".png") return read_png(path);
    return read_pgm(path);
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write image: " + path.string());
    os << "P5\n" << image.width << " " << image.height << "\n255\n";
    os.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
    if (!os) throw IoError("failed writing image: " + path.string());
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&png, path.c_str(), 0, image.pixels.data(), 0, nullptr))
        throw IoError("cannot write PNG " + path.string() + ": " + png.message);
}

void write_image(const std::filesystem::path& path, const GrayImage& image) {
    if (lower_extension(path) == ".png")
        write_png(path, image);
    else
        write_pgm(path, image);
}

Tensor to_tensor(const GrayImage& image) {
    Tensor t({1, image.height, image.width});
    for (std::size_t i = 0; i < image.pixels.size(); ++i) t[i] = image.pixels[i] / 255.0f;
    return t;
}

Tensor crop_tensor(const GrayImage& image, std::size_t x, std::size_t y, std::size_t w, std::size_t h) {
    if (x + w > image.width || y + h > image.height)
        throw InvalidInput("crop window exceeds image bounds");
    Tensor t({1, h, w});
    for (std::size_t r = 0; r < h; ++r) {
        const std::uint8_t* src = image.pixels.data() + (y + r) * image.width + x;
        float* dst = t.data() + r * w;
        for (std::size_t c = 0; c < w; ++c) dst[c] = src[c] / 255.0f;
    }
    return t;
}

GrayImage quantize_map(const Tensor& map) {
    if (map.rank() != 3 || map.dim(0) != 1) throw InvalidInput("quantize_map: expected 1 x H x W");
    GrayImage img(map.dim(2), map.dim(1));
    for (std::size_t i = 0; i < map.size(); ++i)
        img.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(map[i], 0.0f, 1.0f) * 255.0f));
    return img;
}

}  // namespace sonarprop
