// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <vector>

#include "backdrop/conditioning/mask.hpp"

namespace backdrop::toy {

inline constexpr int kSceneSize = 64;
inline constexpr int kNumClasses = 8;

inline constexpr std::array<const char*, kNumClasses> kShapeClasses = {
    "circle", "ring", "square", "frame", "triangle", "diamond", "cross", "bars"};

/// Background families; descriptors feed the caption template, and the words
/// deliberately overlap the background-alteration prompt vocabulary so the
/// text conditioning has something to learn from.
inline constexpr std::array<const char*, 8> kBackgroundDescriptors = {
    "plain",           "vivid red",           "vivid green",       "vivid blue",
    "vivid colorful",  "intricately textured", "colorful textured", "distorted textures"};

/// One synthetic scene: a flat-coloured shape over a procedural background,
/// with exact ground-truth mask and a templated caption.
struct ShapesScene {
    std::string id;
    Image image;  // (3, 64, 64), values in [0.02, 0.98]
    std::string class_label;
    int class_index = 0;
    cond::ObjectMask ground_truth_mask;
    std::string background_descriptor;
    std::string caption;
};

std::string make_scene_caption(const std::string& class_label, const std::string& background);

/// Deterministic, class-balanced corpus. Scene i gets class i % kNumClasses;
/// per-scene randomness derives from (seed, split, i) so any subset is
/// reproducible in isolation. Mask coverage is kept within [5%, 60%].
std::vector<ShapesScene> generate_shapes_dataset(int n, uint64_t seed, const std::string& split);

}  // namespace backdrop::toy
