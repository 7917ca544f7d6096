// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#include "backdrop/core/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <vector>

#include "backdrop/core/errors.hpp"

namespace backdrop {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_png(const std::filesystem::path& file, const Image& image) {
    if (image.rank() != 3 || image.dim(0) != 3) throw ValidationError("write_png: CHW RGB image expected");
    const int H = image.dim(1), W = image.dim(2);

    FilePtr fp(std::fopen(file.string().c_str(), "wb"));
    if (!fp) throw IoError("cannot open for write: " + file.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png write failed: " + file.string());
    }
    png_init_io(png, fp.get());
    // Fixed settings keep the output byte-stable across runs.
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, static_cast<png_uint_32>(W), static_cast<png_uint_32>(H), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<uint8_t> row(static_cast<size_t>(W) * 3);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c) row[static_cast<size_t>(x) * 3 + c] = quantize8(image.at(c, y, x));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path& file) {
    FilePtr fp(std::fopen(file.string().c_str(), "rb"));
    if (!fp) throw IoError("cannot open for read: " + file.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png read failed: " + file.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const int W = static_cast<int>(png_get_image_width(png, info));
    const int H = static_cast<int>(png_get_image_height(png, info));
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    Image out({3, H, W});
    std::vector<uint8_t> row(png_get_rowbytes(png, info));
    for (int y = 0; y < H; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(c, y, x) = static_cast<float>(row[static_cast<size_t>(x) * 3 + c]) / 255.0f;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

void write_mask_png(const std::filesystem::path& file, const Tensor<uint8_t>& mask) {
    if (mask.rank() != 2) throw ValidationError("write_mask_png: HW mask expected");
    const int H = mask.dim(0), W = mask.dim(1);

    FilePtr fp(std::fopen(file.string().c_str(), "wb"));
    if (!fp) throw IoError("cannot open for write: " + file.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png write failed: " + file.string());
    }
    png_init_io(png, fp.get());
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, static_cast<png_uint_32>(W), static_cast<png_uint_32>(H), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<uint8_t> row(static_cast<size_t>(W));
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) row[static_cast<size_t>(x)] = mask[static_cast<size_t>(y) * W + x] ? 255 : 0;
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Tensor<uint8_t> read_mask_png(const std::filesystem::path& file) {
    Image rgb = read_png(file);
    const int H = rgb.dim(1), W = rgb.dim(2);
    Tensor<uint8_t> mask({H, W});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            mask[static_cast<size_t>(y) * W + x] = rgb.at(0, y, x) > 0.5f ? 1 : 0;
    return mask;
}

}  // namespace backdrop
