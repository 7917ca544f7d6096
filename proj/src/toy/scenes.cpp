// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#include "backdrop/toy/scenes.hpp"

#include <algorithm>
#include <cmath>

#include "backdrop/core/rng.hpp"

namespace backdrop::toy {

namespace {

constexpr int S = kSceneSize;

struct Color {
    float r, g, b;
};

float clampv(float v) { return std::clamp(v, 0.02f, 0.98f); }

Color random_saturated(Rng& rng) {
    // Random hue, high saturation, medium-high value.
    const double h = rng.uniform() * 6.0;
    const float v = static_cast<float>(0.6 + 0.35 * rng.uniform());
    const float s = static_cast<float>(0.75 + 0.2 * rng.uniform());
    const float c = v * s;
    const float x = c * static_cast<float>(1.0 - std::fabs(std::fmod(h, 2.0) - 1.0));
    const float m = v - c;
    float r = 0, g = 0, b = 0;
    switch (static_cast<int>(h)) {
        case 0: r = c, g = x; break;
        case 1: r = x, g = c; break;
        case 2: g = c, b = x; break;
        case 3: g = x, b = c; break;
        case 4: r = x, b = c; break;
        default: r = c, b = x; break;
    }
    return {r + m, g + m, b + m};
}

float color_dist(const Color& a, const Color& b) {
    const float dr = a.r - b.r, dg = a.g - b.g, db = a.b - b.b;
    return std::sqrt(dr * dr + dg * dg + db * db);
}

void paint_background(Image& img, int bg_kind, Rng& rng, Color* mean_out) {
    auto set = [&img](int x, int y, Color c) {
        img.at(0, y, x) = clampv(c.r);
        img.at(1, y, x) = clampv(c.g);
        img.at(2, y, x) = clampv(c.b);
    };
    Color mean{0, 0, 0};
    auto add_mean = [&mean](Color c) {
        mean.r += c.r;
        mean.g += c.g;
        mean.b += c.b;
    };

    switch (bg_kind) {
        case 0: {  // plain: light gray with a faint vertical ramp
            const float base = static_cast<float>(0.5 + 0.25 * rng.uniform());
            for (int y = 0; y < S; ++y)
                for (int x = 0; x < S; ++x) {
                    const float v = base + 0.06f * (static_cast<float>(y) / S - 0.5f);
                    Color c{v, v, v};
                    set(x, y, c);
                    add_mean(c);
                }
            break;
        }
        case 1:
        case 2:
        case 3: {  // vivid red / green / blue
            const float hi = static_cast<float>(0.72 + 0.2 * rng.uniform());
            const float lo = static_cast<float>(0.06 + 0.1 * rng.uniform());
            for (int y = 0; y < S; ++y)
                for (int x = 0; x < S; ++x) {
                    const float ramp = 0.08f * (static_cast<float>(x) / S - 0.5f);
                    Color c{lo, lo, lo};
                    (bg_kind == 1 ? c.r : bg_kind == 2 ? c.g : c.b) = hi + ramp;
                    set(x, y, c);
                    add_mean(c);
                }
            break;
        }
        case 4: {  // vivid colorful: horizontal blend between two hues
            const Color a = random_saturated(rng);
            const Color b = random_saturated(rng);
            for (int y = 0; y < S; ++y)
                for (int x = 0; x < S; ++x) {
                    const float t = static_cast<float>(x) / (S - 1);
                    Color c{a.r + t * (b.r - a.r), a.g + t * (b.g - a.g), a.b + t * (b.b - a.b)};
                    set(x, y, c);
                    add_mean(c);
                }
            break;
        }
        case 5: {  // intricately textured: fine checkerboard
            const Color a = random_saturated(rng);
            const Color b = random_saturated(rng);
            const int cell = 2 + static_cast<int>(rng.uniform() * 3.0);
            for (int y = 0; y < S; ++y)
                for (int x = 0; x < S; ++x) {
                    const bool odd = ((x / cell) + (y / cell)) % 2 == 1;
                    Color c = odd ? a : b;
                    set(x, y, c);
                    add_mean(c);
                }
            break;
        }
        case 6: {  // colorful textured: diagonal hue stripes
            const float phase = static_cast<float>(rng.uniform() * 6.0);
            const int period = 6 + static_cast<int>(rng.uniform() * 6.0);
            for (int y = 0; y < S; ++y)
                for (int x = 0; x < S; ++x) {
                    const float h = std::fmod(phase + 6.0f * static_cast<float>((x + y) % (3 * period)) /
                                                          static_cast<float>(3 * period),
                                              6.0f);
                    const float cc = 0.75f;
                    const float xx = cc * (1.0f - std::fabs(std::fmod(h, 2.0f) - 1.0f));
                    Color c{0.15f, 0.15f, 0.15f};
                    switch (static_cast<int>(h)) {
                        case 0: c.r += cc, c.g += xx; break;
                        case 1: c.r += xx, c.g += cc; break;
                        case 2: c.g += cc, c.b += xx; break;
                        case 3: c.g += xx, c.b += cc; break;
                        case 4: c.r += xx, c.b += cc; break;
                        default: c.r += cc, c.b += xx; break;
                    }
                    set(x, y, c);
                    add_mean(c);
                }
            break;
        }
        default: {  // distorted textures: bilinear value noise over two colours
            const Color a = random_saturated(rng);
            const Color b = random_saturated(rng);
            constexpr int G = 9;  // 8 cells + fence value
            float grid[G][G];
            for (auto& row : grid)
                for (float& v : row) v = static_cast<float>(rng.uniform());
            for (int y = 0; y < S; ++y)
                for (int x = 0; x < S; ++x) {
                    const float fy = static_cast<float>(y) / S * (G - 1);
                    const float fx = static_cast<float>(x) / S * (G - 1);
                    const int iy = static_cast<int>(fy), ix = static_cast<int>(fx);
                    const float ty = fy - iy, tx = fx - ix;
                    const float v = grid[iy][ix] * (1 - ty) * (1 - tx) + grid[iy + 1][ix] * ty * (1 - tx) +
                                    grid[iy][ix + 1] * (1 - ty) * tx + grid[iy + 1][ix + 1] * ty * tx;
                    Color c{a.r + v * (b.r - a.r), a.g + v * (b.g - a.g), a.b + v * (b.b - a.b)};
                    set(x, y, c);
                    add_mean(c);
                }
            break;
        }
    }
    const float inv = 1.0f / (S * S);
    *mean_out = {mean.r * inv, mean.g * inv, mean.b * inv};
}

/// Fills mask values for one shape; returns object pixel count.
size_t draw_shape_mask(Tensor<uint8_t>& mask, int class_index, Rng& rng) {
    std::fill(mask.vec().begin(), mask.vec().end(), uint8_t(0));
    const int cx = 24 + rng.uniform_int(0, 15);
    const int cy = 24 + rng.uniform_int(0, 15);
    const float u = static_cast<float>(rng.uniform());
    size_t count = 0;
    auto plot = [&](int x, int y, bool inside) {
        if (!inside || x < 2 || x >= S - 2 || y < 2 || y >= S - 2) return;
        uint8_t& m = mask[static_cast<size_t>(y) * S + x];
        if (!m) {
            m = 1;
            ++count;
        }
    };
    for (int y = 0; y < S; ++y)
        for (int x = 0; x < S; ++x) {
            const float dx = static_cast<float>(x - cx);
            const float dy = static_cast<float>(y - cy);
            bool inside = false;
            switch (class_index) {
                case 0: {  // circle
                    const float r = 10.0f + 12.0f * u;
                    inside = dx * dx + dy * dy <= r * r;
                    break;
                }
                case 1: {  // ring
                    const float r = 12.0f + 12.0f * u;
                    const float ri = 0.55f * r;
                    const float d2 = dx * dx + dy * dy;
                    inside = d2 <= r * r && d2 > ri * ri;
                    break;
                }
                case 2: {  // square
                    const float s = 9.0f + 11.0f * u;
                    inside = std::fabs(dx) <= s && std::fabs(dy) <= s;
                    break;
                }
                case 3: {  // frame
                    const float s = 11.0f + 11.0f * u;
                    const float si = 0.58f * s;
                    inside = std::fabs(dx) <= s && std::fabs(dy) <= s &&
                             !(std::fabs(dx) <= si && std::fabs(dy) <= si);
                    break;
                }
                case 4: {  // triangle, apex up
                    const float h = 11.0f + 12.0f * u;
                    inside = dy >= -h && dy <= h && std::fabs(dx) <= (dy + h) * 0.55f;
                    break;
                }
                case 5: {  // diamond
                    const float a = 11.0f + 12.0f * u;
                    inside = std::fabs(dx) / a + std::fabs(dy) / a <= 1.0f;
                    break;
                }
                case 6: {  // cross
                    const float arm = 12.0f + 10.0f * u;
                    const float w = 0.36f * arm;
                    inside = (std::fabs(dx) <= w && std::fabs(dy) <= arm) ||
                             (std::fabs(dy) <= w && std::fabs(dx) <= arm);
                    break;
                }
                default: {  // bars: two vertical bars
                    const float h = 12.0f + 10.0f * u;
                    const float w = 0.30f * h;
                    const float gap = 0.85f * h;
                    inside = std::fabs(dy) <= h && (std::fabs(dx - gap * 0.5f) <= w ||
                                                    std::fabs(dx + gap * 0.5f) <= w);
                    break;
                }
            }
            plot(x, y, inside);
        }
    return count;
}

}  // namespace

std::string make_scene_caption(const std::string& class_label, const std::string& background) {
    return "a picture of a " + class_label + " on a " + background + " background";
}

std::vector<ShapesScene> generate_shapes_dataset(int n, uint64_t seed, const std::string& split) {
    if (n < 1) throw ValidationError("scene count must be >= 1");
    std::vector<ShapesScene> scenes;
    scenes.reserve(static_cast<size_t>(n));
    const size_t total_pixels = static_cast<size_t>(S) * S;

    for (int i = 0; i < n; ++i) {
        Rng rng(stable_hash64(seed, split, "scene_" + std::to_string(i)));
        ShapesScene scene;
        scene.class_index = i % kNumClasses;
        scene.class_label = kShapeClasses[static_cast<size_t>(scene.class_index)];
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%s_%05d", split.c_str(), i);
        scene.id = buf;

        // Backgrounds correlate with class half the time, so background cues
        // carry label information the classifier can (and does) pick up.
        const int bg_kind = rng.uniform() < 0.5 ? scene.class_index
                                                : rng.uniform_int(0, static_cast<int>(kBackgroundDescriptors.size()) - 1);
        scene.background_descriptor = kBackgroundDescriptors[static_cast<size_t>(bg_kind)];
        scene.caption = make_scene_caption(scene.class_label, scene.background_descriptor);

        scene.image = Image({3, S, S});
        Color bg_mean;
        paint_background(scene.image, bg_kind, rng, &bg_mean);

        scene.ground_truth_mask.values = Tensor<uint8_t>({S, S});
        size_t count = 0;
        for (int attempt = 0; attempt < 64; ++attempt) {
            count = draw_shape_mask(scene.ground_truth_mask.values, scene.class_index, rng);
            const double frac = static_cast<double>(count) / static_cast<double>(total_pixels);
            if (frac >= 0.05 && frac <= 0.60) break;
        }

        Color obj = random_saturated(rng);
        for (int attempt = 0; attempt < 64 && color_dist(obj, bg_mean) < 0.4f; ++attempt)
            obj = random_saturated(rng);

        for (int y = 0; y < S; ++y)
            for (int x = 0; x < S; ++x) {
                if (!scene.ground_truth_mask.values[static_cast<size_t>(y) * S + x]) continue;
                scene.image.at(0, y, x) = clampv(obj.r);
                scene.image.at(1, y, x) = clampv(obj.g);
                scene.image.at(2, y, x) = clampv(obj.b);
            }
        scenes.push_back(std::move(scene));
    }
    return scenes;
}

}  // namespace backdrop::toy
