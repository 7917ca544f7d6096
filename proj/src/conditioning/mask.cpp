// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#include "backdrop/conditioning/mask.hpp"

#include <algorithm>

namespace backdrop::cond {

ObjectMask dilate_mask(const ObjectMask& mask, int radius) {
    if (radius < 0) throw ValidationError("dilation radius must be >= 0");
    if (radius == 0) return ObjectMask{mask.values, 0};
    const int H = mask.height(), W = mask.width();
    ObjectMask out;
    out.values = Tensor<uint8_t>::zeros({H, W});
    out.dilation_radius = radius;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            if (!mask.values[static_cast<size_t>(y) * W + x]) continue;
            const int y0 = std::max(0, y - radius), y1 = std::min(H - 1, y + radius);
            const int x0 = std::max(0, x - radius), x1 = std::min(W - 1, x + radius);
            for (int ny = y0; ny <= y1; ++ny)
                for (int nx = x0; nx <= x1; ++nx) out.values[static_cast<size_t>(ny) * W + nx] = 1;
        }
    }
    return out;
}

Tensorf downsample_mask(const ObjectMask& mask, int factor) {
    if (factor < 1) throw ValidationError("downsample factor must be >= 1");
    const int H = mask.height(), W = mask.width();
    if (H % factor != 0 || W % factor != 0) throw ValidationError("mask dims must be divisible by factor");
    const int Hl = H / factor, Wl = W / factor;
    Tensorf out({1, 1, Hl, Wl});
    const float inv = 1.0f / static_cast<float>(factor * factor);
    for (int y = 0; y < Hl; ++y)
        for (int x = 0; x < Wl; ++x) {
            int acc = 0;
            for (int dy = 0; dy < factor; ++dy)
                for (int dx = 0; dx < factor; ++dx)
                    acc += mask.values[static_cast<size_t>(y * factor + dy) * W + (x * factor + dx)];
            out.at(0, 0, y, x) = static_cast<float>(acc) * inv;
        }
    return out;
}

}  // namespace backdrop::cond
