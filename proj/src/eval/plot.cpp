// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#include "backdrop/eval/plot.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace backdrop::eval {

namespace {

// 5x7 bitmap glyphs, one byte per column, LSB = top row. Digits, upper-case
// letters and the few punctuation marks the charts use.
struct Glyph {
    char ch;
    uint8_t col[5];
};

constexpr Glyph kGlyphs[] = {
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00}}, {'-', {0x08, 0x08, 0x08, 0x08, 0x08}},
    {'.', {0x00, 0x60, 0x60, 0x00, 0x00}}, {'%', {0x62, 0x64, 0x08, 0x13, 0x23}},
    {'_', {0x40, 0x40, 0x40, 0x40, 0x40}}, {':', {0x00, 0x36, 0x36, 0x00, 0x00}},
    {'0', {0x3E, 0x51, 0x49, 0x45, 0x3E}}, {'1', {0x00, 0x42, 0x7F, 0x40, 0x00}},
    {'2', {0x42, 0x61, 0x51, 0x49, 0x46}}, {'3', {0x21, 0x41, 0x45, 0x4B, 0x31}},
    {'4', {0x18, 0x14, 0x12, 0x7F, 0x10}}, {'5', {0x27, 0x45, 0x45, 0x45, 0x39}},
    {'6', {0x3C, 0x4A, 0x49, 0x49, 0x30}}, {'7', {0x01, 0x71, 0x09, 0x05, 0x03}},
    {'8', {0x36, 0x49, 0x49, 0x49, 0x36}}, {'9', {0x06, 0x49, 0x49, 0x29, 0x1E}},
    {'A', {0x7E, 0x09, 0x09, 0x09, 0x7E}}, {'B', {0x7F, 0x49, 0x49, 0x49, 0x36}},
    {'C', {0x3E, 0x41, 0x41, 0x41, 0x22}}, {'D', {0x7F, 0x41, 0x41, 0x22, 0x1C}},
    {'E', {0x7F, 0x49, 0x49, 0x49, 0x41}}, {'F', {0x7F, 0x09, 0x09, 0x09, 0x01}},
    {'G', {0x3E, 0x41, 0x49, 0x49, 0x7A}}, {'H', {0x7F, 0x08, 0x08, 0x08, 0x7F}},
    {'I', {0x00, 0x41, 0x7F, 0x41, 0x00}}, {'J', {0x20, 0x40, 0x41, 0x3F, 0x01}},
    {'K', {0x7F, 0x08, 0x14, 0x22, 0x41}}, {'L', {0x7F, 0x40, 0x40, 0x40, 0x40}},
    {'M', {0x7F, 0x02, 0x0C, 0x02, 0x7F}}, {'N', {0x7F, 0x04, 0x08, 0x10, 0x7F}},
    {'O', {0x3E, 0x41, 0x41, 0x41, 0x3E}}, {'P', {0x7F, 0x09, 0x09, 0x09, 0x06}},
    {'Q', {0x3E, 0x41, 0x51, 0x21, 0x5E}}, {'R', {0x7F, 0x09, 0x19, 0x29, 0x46}},
    {'S', {0x46, 0x49, 0x49, 0x49, 0x31}}, {'T', {0x01, 0x01, 0x7F, 0x01, 0x01}},
    {'U', {0x3F, 0x40, 0x40, 0x40, 0x3F}}, {'V', {0x1F, 0x20, 0x40, 0x20, 0x1F}},
    {'W', {0x3F, 0x40, 0x38, 0x40, 0x3F}}, {'X', {0x63, 0x14, 0x08, 0x14, 0x63}},
    {'Y', {0x07, 0x08, 0x70, 0x08, 0x07}}, {'Z', {0x61, 0x51, 0x49, 0x45, 0x43}},
};

const uint8_t* glyph_for(char ch) {
    const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    for (const auto& g : kGlyphs)
        if (g.ch == up) return g.col;
    return kGlyphs[0].col;  // blank for anything unknown
}

struct Canvas {
    Image img;

    Canvas(int h, int w) : img({3, h, w}) { std::fill(img.vec().begin(), img.vec().end(), 1.0f); }

    void put(int x, int y, float r, float g, float b) {
        if (x < 0 || y < 0 || y >= img.dim(1) || x >= img.dim(2)) return;
        img.at(0, y, x) = r;
        img.at(1, y, x) = g;
        img.at(2, y, x) = b;
    }

    void fill_rect(int x0, int y0, int x1, int y1, float r, float g, float b) {
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) put(x, y, r, g, b);
    }

    void line(int x0, int y0, int x1, int y1, float r, float g, float b) {
        const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
        const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        for (;;) {
            put(x0, y0, r, g, b);
            if (x0 == x1 && y0 == y1) break;
            const int e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
        }
    }

    void text(int x, int y, const std::string& s) {
        for (char ch : s) {
            const uint8_t* cols = glyph_for(ch);
            for (int cx = 0; cx < 5; ++cx)
                for (int cy = 0; cy < 7; ++cy)
                    if (cols[cx] & (1 << cy)) put(x + cx, y + cy, 0.1f, 0.1f, 0.1f);
            x += 6;
        }
    }
};

}  // namespace

Image render_reliability_diagram(const ReliabilityBins& bins, const std::string& title) {
    const int W = 320, H = 260, left = 30, bottom = 230, top = 30, right = 300;
    Canvas canvas(H, W);
    canvas.text(left, 10, title);
    canvas.line(left, bottom, right, bottom, 0.f, 0.f, 0.f);
    canvas.line(left, top, left, bottom, 0.f, 0.f, 0.f);

    const int span_x = right - left, span_y = bottom - top;
    const int M = bins.num_bins;
    for (int b = 0; b < M; ++b) {
        const int x0 = left + b * span_x / M + 1;
        const int x1 = left + (b + 1) * span_x / M - 1;
        const double acc = bins.mean_accuracy[static_cast<size_t>(b)];
        const int y0 = bottom - static_cast<int>(std::lround(acc * span_y));
        if (bins.count[static_cast<size_t>(b)] > 0)
            canvas.fill_rect(x0, std::min(y0, bottom - 1), x1, bottom - 1, 0.35f, 0.5f, 0.85f);
    }
    // Perfect-calibration diagonal.
    canvas.line(left, bottom, right, top, 0.85f, 0.3f, 0.3f);
    canvas.text(left - 22, top - 4, "1.0");
    canvas.text(left - 22, bottom - 4, "0.0");
    return canvas.img;
}

Image render_bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                       const std::string& title) {
    if (labels.size() != values.size()) throw ValidationError("bar chart labels/values mismatch");
    const int n = static_cast<int>(labels.size());
    const int W = 460, bar_h = 16, gap = 8, top = 28;
    const int H = top + n * (bar_h + gap) + 16;
    const int left = 150, right = 440;
    Canvas canvas(H, W);
    canvas.text(8, 10, title);
    for (int i = 0; i < n; ++i) {
        const int y0 = top + i * (bar_h + gap);
        std::string label = labels[static_cast<size_t>(i)];
        if (label.size() > 22) label.resize(22);
        canvas.text(8, y0 + 4, label);
        const double v = std::clamp(values[static_cast<size_t>(i)], 0.0, 100.0);
        const int len = static_cast<int>(std::lround(v / 100.0 * (right - left)));
        canvas.fill_rect(left, y0, left + std::max(len, 1), y0 + bar_h, 0.35f, 0.65f, 0.45f);
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%.1f", values[static_cast<size_t>(i)]);
        canvas.text(left + len + 4, y0 + 4, buf);
    }
    return canvas.img;
}

}  // namespace backdrop::eval
