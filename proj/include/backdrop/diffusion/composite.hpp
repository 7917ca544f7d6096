// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "backdrop/conditioning/mask.hpp"

namespace backdrop::diffusion {

/// Per-pixel selection: original where mask = 1, generated where mask = 0.
/// This is what makes object preservation exact regardless of what the
/// sampler produced inside the object region.
template <class T>
Tensor<T> composite(const Tensor<T>& original, const Tensor<T>& generated, const cond::ObjectMask& mask) {
    if (!original.same_shape(generated)) throw ValidationError("composite: image shape mismatch");
    if (original.rank() != 3) throw ValidationError("composite: CHW image expected");
    if (original.dim(1) != mask.height() || original.dim(2) != mask.width())
        throw ValidationError("composite: mask spatial shape mismatch");
    const int C = original.dim(0), H = original.dim(1), W = original.dim(2);
    Tensor<T> out(original.shape());
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                out.at(c, y, x) = mask.values[static_cast<size_t>(y) * W + x] ? original.at(c, y, x)
                                                                              : generated.at(c, y, x);
    return out;
}

}  // namespace backdrop::diffusion
