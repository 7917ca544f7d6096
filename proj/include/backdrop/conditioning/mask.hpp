// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "backdrop/core/tensor.hpp"

namespace backdrop::cond {

/// Binary object mask, 1 = object pixel. dilation_radius records the
/// enlargement applied to produce the diffusion-facing mask.
struct ObjectMask {
    Tensor<uint8_t> values;  // (H, W)
    int dilation_radius = 0;

    int height() const { return values.dim(0); }
    int width() const { return values.dim(1); }

    size_t object_pixels() const {
        size_t n = 0;
        for (size_t i = 0; i < values.size(); ++i) n += values[i] ? 1 : 0;
        return n;
    }

    bool empty_mask() const { return object_pixels() == 0; }
};

/// Morphological dilation with a square (Chebyshev-ball) structuring element.
/// radius 0 is the identity; output is always a superset of the input.
ObjectMask dilate_mask(const ObjectMask& mask, int radius);

/// Box-average downsampling of a binary mask by an integer factor; values land
/// in [0,1]. Used to bring masks to latent resolution.
Tensorf downsample_mask(const ObjectMask& mask, int factor);

}  // namespace backdrop::cond
