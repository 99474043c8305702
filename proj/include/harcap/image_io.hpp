#pragma once

// Still-frame ingest: binary/ASCII PGM and 8-bit PNG (via libpng's
// simplified API). Colour inputs are reduced to luma on load.

#include <harcap/dataset.hpp>
#include <harcap/keyframe.hpp>

#include <png.h>

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace harcap {

namespace detail {

inline bool is_frame_file(const fs::path& p) {
    auto ext = to_lower(p.extension().string());
    return ext == ".png" || ext == ".pgm";
}

inline std::string_view media_type_for(const fs::path& p) {
    auto ext = to_lower(p.extension().string());
    if (ext == ".png") return "image/png";
    if (ext == ".pgm") return "image/x-portable-graymap";
    return "application/octet-stream";
}

class PgmReader {
public:
    explicit PgmReader(std::string_view data) : d_(data) {}

    std::string token() {
        skip_space_and_comments();
        std::string t;
        while (pos_ < d_.size() && !std::isspace(static_cast<unsigned char>(d_[pos_]))) {
            t.push_back(d_[pos_++]);
        }
        if (t.empty()) throw ParseError("PGM: unexpected end of header");
        return t;
    }

    int number() {
        auto t = token();
        try {
            return std::stoi(t);
        } catch (const std::exception&) {
            throw ParseError("PGM: bad header value '" + t + "'");
        }
    }

    // Exactly one whitespace byte separates the header from raster data.
    std::string_view raster() {
        if (pos_ >= d_.size()) throw ParseError("PGM: missing raster");
        return d_.substr(pos_ + 1);
    }

private:
    void skip_space_and_comments() {
        while (pos_ < d_.size()) {
            if (std::isspace(static_cast<unsigned char>(d_[pos_]))) {
                ++pos_;
            } else if (d_[pos_] == '#') {
                while (pos_ < d_.size() && d_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::string_view d_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline Frame decode_pgm(std::string_view data, std::size_t index = 0) {
    detail::PgmReader rd(data);
    auto magic = rd.token();
    if (magic != "P5" && magic != "P2") throw ParseError("PGM: unsupported magic '" + magic + "'");
    int w = rd.number();
    int h = rd.number();
    int maxval = rd.number();
    if (w <= 0 || h <= 0) throw ParseError("PGM: non-positive dimensions");
    if (maxval <= 0 || maxval > 255) throw ParseError("PGM: only 8-bit maxval supported");

    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    std::vector<std::uint8_t> px(n);
    auto scale = [&](int v) {
        return static_cast<std::uint8_t>(maxval == 255 ? v : std::lround(v * 255.0 / maxval));
    };
    if (magic == "P5") {
        auto raster = rd.raster();
        if (raster.size() < n) throw ParseError("PGM: truncated raster");
        for (std::size_t i = 0; i < n; ++i) px[i] = scale(static_cast<unsigned char>(raster[i]));
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            int v = rd.number();
            if (v < 0 || v > maxval) throw ParseError("PGM: sample out of range");
            px[i] = scale(v);
        }
    }
    return Frame(index, w, h, std::move(px));
}

inline std::string encode_pgm(const Frame& f) {
    std::string out = "P5\n" + std::to_string(f.width) + " " + std::to_string(f.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(f.pixels.data()), f.pixels.size());
    return out;
}

inline Frame decode_png(std::string_view data, std::size_t index = 0) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, data.data(), data.size())) {
        throw ParseError(std::string("PNG: ") + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw ParseError("PNG: " + msg);
    }
    return frame_from_rgb(index, static_cast<int>(image.width), static_cast<int>(image.height),
                          rgb);
}

/// Encodes an RGB buffer (width*height*3 bytes) as PNG.
inline std::string encode_png_rgb(int width, int height, std::span<const std::uint8_t> rgb) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
        throw IoError(std::string("PNG encode: ") + image.message);
    }
    std::string out(size, '\0');
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
        throw IoError(std::string("PNG encode: ") + image.message);
    }
    out.resize(size);
    return out;
}

inline Frame decode_frame(const fs::path& path, std::string_view bytes, std::size_t index) {
    auto ext = to_lower(path.extension().string());
    if (ext == ".png") return decode_png(bytes, index);
    if (ext == ".pgm") return decode_pgm(bytes, index);
    throw ParseError("unsupported frame format: " + path.string());
}

/// Frame files (.png / .pgm) in `dir`, in lexicographic filename order.
inline std::vector<fs::path> list_frame_files(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError("frames directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir, ec)) {
        if (e.is_regular_file() && detail::is_frame_file(e.path())) files.push_back(e.path());
    }
    if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) {
                  return a.filename().string() < b.filename().string();
              });
    return files;
}

inline std::vector<Frame> load_frames(std::span<const fs::path> files) {
    std::vector<Frame> frames;
    frames.reserve(files.size());
    for (std::size_t i = 0; i < files.size(); ++i) {
        frames.push_back(decode_frame(files[i], read_file(files[i]), i));
    }
    return frames;
}

}  // namespace harcap
