// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>

#include "backdrop/conditioning/mask.hpp"

namespace backdrop::cond {

/// Everything the generation stage needs to know about one source image:
/// the scene caption, the object mask and identification.
struct ConditioningBundle {
    std::string prompt_text;
    ObjectMask mask;
    std::string source_image_id;
    std::string class_label;
};

/// Produces the object mask for an image. Implementations range from the
/// ground-truth registry to a threshold segmenter; a real promptable
/// segmenter can be plugged in behind the same interface.
class MaskProvider {
public:
    virtual ~MaskProvider() = default;
    virtual ObjectMask segment(const Image& image, const std::string& class_label,
                               const std::string& image_id) const = 0;
};

/// Produces a scene description for an image.
class CaptionProvider {
public:
    virtual ~CaptionProvider() = default;
    virtual std::string caption(const Image& image, const std::string& image_id) const = 0;
};

/// Ground-truth lookup by image id.
class OracleMaskProvider : public MaskProvider {
public:
    explicit OracleMaskProvider(std::map<std::string, ObjectMask> registry) : registry_(std::move(registry)) {}

    ObjectMask segment(const Image&, const std::string&, const std::string& image_id) const override;

private:
    std::map<std::string, ObjectMask> registry_;
};

/// Stored-caption lookup by image id.
class OracleCaptionProvider : public CaptionProvider {
public:
    explicit OracleCaptionProvider(std::map<std::string, std::string> registry) : registry_(std::move(registry)) {}

    std::string caption(const Image&, const std::string& image_id) const override;

private:
    std::map<std::string, std::string> registry_;
};

/// Segments by RGB distance from the estimated background colour (median of
/// the border ring). A pixel is foreground iff its distance exceeds the
/// threshold; ties count as background.
class ThresholdMaskProvider : public MaskProvider {
public:
    explicit ThresholdMaskProvider(float threshold = 0.18f) : threshold_(threshold) {}

    ObjectMask segment(const Image& image, const std::string& class_label,
                       const std::string& image_id) const override;

private:
    float threshold_;
};

/// Runs both providers and validates the result. Throws UnsupportedImageError
/// for empty or full masks (no usable foreground/background separation) and
/// ProviderError when captioning fails.
ConditioningBundle build_conditioning(const Image& image, const std::string& class_label,
                                      const std::string& image_id, const MaskProvider& mask_provider,
                                      const CaptionProvider& caption_provider);

}  // namespace backdrop::cond
