#pragma once

// PNG decode/encode via libpng. Reads 8- and 16-bit PNGs (grayscale expanded,
// alpha stripped) into [0,1] float tensors; writes 8-bit RGB.

#include <png.h>

#include <cstdio>
#include <memory>

#include "spjf/tensor.hpp"

namespace spjf {

inline Tensor read_png(const std::string& path) {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.c_str(), "rb"),
                                                       &std::fclose);
    if (!fp) throw std::runtime_error("read_png: cannot open " + path);
    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
        throw std::runtime_error("read_png: " + path + " is not a PNG file");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("read_png: failed to decode " + path);
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    const int bit_depth = png_get_bit_depth(png, info);
    if (bit_depth == 16) png_set_swap(png);  // file is big-endian
    png_read_update_info(png, info);

    const int w = int(png_get_image_width(png, info));
    const int h = int(png_get_image_height(png, info));
    const int channels = int(png_get_channels(png, info));
    const size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<png_byte> data(size_t(h) * rowbytes);
    std::vector<png_bytep> rows(static_cast<size_t>(h));
    for (int y = 0; y < h; ++y) rows[size_t(y)] = data.data() + size_t(y) * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Tensor img(h, w, channels);
    if (bit_depth == 16) {
        const double inv = 1.0 / 65535.0;
        for (int y = 0; y < h; ++y) {
            const uint16_t* r = reinterpret_cast<const uint16_t*>(rows[size_t(y)]);
            for (int x = 0; x < w * channels; ++x)
                img.v[(size_t(y) * w * channels) + size_t(x)] = float(r[x] * inv);
        }
    } else {
        const double inv = 1.0 / 255.0;
        for (int y = 0; y < h; ++y) {
            const png_byte* r = rows[size_t(y)];
            for (int x = 0; x < w * channels; ++x)
                img.v[(size_t(y) * w * channels) + size_t(x)] = float(r[x] * inv);
        }
    }
    return img;
}

// Rounds to the 8-bit grid; the [0,1] clamp guards quantization overflow.
inline void write_png8(const std::string& path, const Tensor& img) {
    if (img.c != 1 && img.c != 3)
        throw std::invalid_argument("write_png8: only 1- or 3-channel images");
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.c_str(), "wb"),
                                                       &std::fclose);
    if (!fp) throw std::runtime_error("write_png8: cannot open " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("write_png8: failed to encode " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, png_uint_32(img.w), png_uint_32(img.h), 8,
                 img.c == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(size_t(img.w) * size_t(img.c));
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w * img.c; ++x) {
            double v = double(img.v[size_t(y) * size_t(img.w) * size_t(img.c) + size_t(x)]);
            v = std::min(1.0, std::max(0.0, v));
            row[size_t(x)] = png_byte(std::lround(v * 255.0));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// Snap to the nearest 8-bit level (used before metric comparison).
inline Tensor quantize8(const Tensor& img) {
    Tensor out = img;
    for (auto& v : out.v) {
        double x = std::min(1.0, std::max(0.0, double(v)));
        v = float(std::lround(x * 255.0) / 255.0);
    }
    return out;
}

}  // namespace spjf
