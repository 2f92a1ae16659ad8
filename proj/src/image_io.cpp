#include <png.h>

#include <cctype>
#include <cstdio>
#include <cstring>
#include <memory>

#include "lsi/dataset.hpp"

namespace lsi {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

RawImage read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png reader allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png info allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed to decode " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_set_expand(png);           // palette -> rgb, gray<8 -> 8, tRNS -> alpha
    png_set_strip_16(png);         // 16-bit -> 8-bit
    png_set_strip_alpha(png);      // drop alpha
    png_read_update_info(png, info);

    RawImage out;
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = static_cast<int>(png_get_channels(png, info));
    if (out.channels != 1 && out.channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(path + ": unsupported channel layout after expansion");
    }
    out.pixels.resize(static_cast<std::size_t>(out.width) * out.height * out.channels);
    std::vector<png_bytep> rows(static_cast<std::size_t>(out.height));
    const std::size_t stride = static_cast<std::size_t>(out.width) * out.channels;
    for (int y = 0; y < out.height; ++y) rows[static_cast<std::size_t>(y)] = out.pixels.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

RawImage read_pgm(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path);
    auto next_token = [&fp, &path]() {
        std::string tok;
        int c;
        while ((c = std::fgetc(fp.get())) != EOF) {
            if (c == '#') {
                while ((c = std::fgetc(fp.get())) != EOF && c != '\n') {
                }
                continue;
            }
            if (std::isspace(c)) {
                if (!tok.empty()) break;
                continue;
            }
            tok.push_back(static_cast<char>(c));
        }
        if (tok.empty()) throw IoError(path + ": truncated header");
        return tok;
    };
    const std::string magic = next_token();
    if (magic != "P5" && magic != "P2") throw IoError(path + ": not a PGM file");
    const int w = std::stoi(next_token());
    const int h = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) throw IoError(path + ": bad PGM header");

    RawImage out;
    out.width = w;
    out.height = h;
    out.channels = 1;
    out.pixels.resize(static_cast<std::size_t>(w) * h);
    const std::size_t count = out.pixels.size();
    if (magic == "P5") {
        if (maxval < 256) {
            if (std::fread(out.pixels.data(), 1, count, fp.get()) != count) throw IoError(path + ": truncated pixels");
        } else {
            std::vector<std::uint8_t> wide(count * 2);
            if (std::fread(wide.data(), 1, wide.size(), fp.get()) != wide.size())
                throw IoError(path + ": truncated pixels");
            for (std::size_t i = 0; i < count; ++i) {
                const int v = (wide[2 * i] << 8) | wide[2 * i + 1];
                out.pixels[i] = static_cast<std::uint8_t>(v * 255 / maxval);
            }
            return out;
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) out.pixels[i] = static_cast<std::uint8_t>(std::stoi(next_token()));
    }
    if (maxval != 255)
        for (auto& p : out.pixels) p = static_cast<std::uint8_t>(p * 255 / maxval);
    return out;
}

} // namespace

RawImage read_image_file(const std::string& path) {
    FilePtr probe(std::fopen(path.c_str(), "rb"));
    if (!probe) throw IoError("cannot open " + path);
    unsigned char magic[8] = {0};
    const std::size_t got = std::fread(magic, 1, sizeof(magic), probe.get());
    probe.reset();
    if (got >= 8 && png_sig_cmp(magic, 0, 8) == 0) return read_png(path);
    if (got >= 2 && magic[0] == 'P' && (magic[1] == '5' || magic[1] == '2')) return read_pgm(path);
    throw IoError(path + ": unrecognized image format");
}

void write_png(const std::string& path, const RawImage& image) {
    if (image.channels != 1 && image.channels != 3) throw IoError("write_png: only gray or RGB supported");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot create " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png writer allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png info allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed to encode " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(image.width) * image.channels;
    for (int y = 0; y < image.height; ++y)
        png_write_row(png, const_cast<png_bytep>(image.pixels.data() + y * stride));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void write_pgm(const std::string& path, const RawImage& image) {
    if (image.channels != 1) throw IoError("write_pgm: single-channel only");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot create " + path);
    std::fprintf(fp.get(), "P5\n%d %d\n255\n", image.width, image.height);
    if (std::fwrite(image.pixels.data(), 1, image.pixels.size(), fp.get()) != image.pixels.size())
        throw IoError("short write to " + path);
}

} // namespace lsi
