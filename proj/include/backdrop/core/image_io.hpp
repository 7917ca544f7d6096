// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

#include "backdrop/core/tensor.hpp"

namespace backdrop {

/// Quantize one channel value to 8 bits: round(clamp01(v) * 255).
inline uint8_t quantize8(float v) {
    v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    return static_cast<uint8_t>(v * 255.0f + 0.5f);
}

/// Writes a CHW float image (values clamped to [0,1]) as an 8-bit RGB PNG.
/// Encoder settings are fixed so identical pixels give identical files.
void write_png(const std::filesystem::path& file, const Image& image);

/// Reads an 8-bit RGB(A) PNG into a CHW float image, v = k/255.
Image read_png(const std::filesystem::path& file);

/// Grayscale PNG helpers for binary masks (0 or 255 on disk).
void write_mask_png(const std::filesystem::path& file, const Tensor<uint8_t>& mask);
Tensor<uint8_t> read_mask_png(const std::filesystem::path& file);

}  // namespace backdrop
