// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#include "backdrop/conditioning/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace backdrop::cond {

ObjectMask OracleMaskProvider::segment(const Image&, const std::string&, const std::string& image_id) const {
    auto it = registry_.find(image_id);
    if (it == registry_.end()) throw ProviderError("no ground-truth mask for image " + image_id);
    return it->second;
}

std::string OracleCaptionProvider::caption(const Image&, const std::string& image_id) const {
    auto it = registry_.find(image_id);
    if (it == registry_.end()) throw ProviderError("no stored caption for image " + image_id);
    return it->second;
}

ObjectMask ThresholdMaskProvider::segment(const Image& image, const std::string&, const std::string&) const {
    if (image.rank() != 3 || image.dim(0) != 3) throw ValidationError("threshold segmenter expects CHW RGB");
    const int H = image.dim(1), W = image.dim(2);

    // Background colour estimate: per-channel median over the border ring.
    std::vector<float> border[3];
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            if (y != 0 && y != H - 1 && x != 0 && x != W - 1) continue;
            for (int c = 0; c < 3; ++c) border[c].push_back(image.at(c, y, x));
        }
    float bg[3];
    for (int c = 0; c < 3; ++c) {
        auto& v = border[c];
        std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
        bg[c] = v[v.size() / 2];
    }

    ObjectMask mask;
    mask.values = Tensor<uint8_t>::zeros({H, W});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            float d2 = 0.0f;
            for (int c = 0; c < 3; ++c) {
                const float d = image.at(c, y, x) - bg[c];
                d2 += d * d;
            }
            mask.values[static_cast<size_t>(y) * W + x] = std::sqrt(d2) > threshold_ ? 1 : 0;
        }
    return mask;
}

ConditioningBundle build_conditioning(const Image& image, const std::string& class_label,
                                      const std::string& image_id, const MaskProvider& mask_provider,
                                      const CaptionProvider& caption_provider) {
    if (!image.all_finite()) throw ValidationError("image contains non-finite values");

    ConditioningBundle bundle;
    bundle.mask = mask_provider.segment(image, class_label, image_id);
    const size_t object = bundle.mask.object_pixels();
    if (object == 0) throw UnsupportedImageError("empty object mask for image " + image_id);
    if (object == bundle.mask.values.size())
        throw UnsupportedImageError("mask covers the whole image " + image_id);

    try {
        bundle.prompt_text = caption_provider.caption(image, image_id);
    } catch (const std::exception& e) {
        throw ProviderError("caption provider failed for " + image_id + ": " + e.what());
    }
    if (bundle.prompt_text.empty()) throw ProviderError("caption provider returned empty text for " + image_id);

    bundle.source_image_id = image_id;
    bundle.class_label = class_label;
    return bundle;
}

}  // namespace backdrop::cond
