// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace backdrop::cond {

enum class PromptCategory { class_label, caption, color, texture };

std::string to_string(PromptCategory c);
PromptCategory prompt_category_from_string(const std::string& s);

/// One row of a prompt suite. The template carries exactly one `{}` slot for
/// class_label/color/texture rows and none for caption rows. Color and
/// texture rows additionally bind their substitution (the descriptor words)
/// so a suite file fully determines the rendered prompt.
struct PromptTemplate {
    std::string variant_name;  // e.g. color_prompt_1
    PromptCategory category = PromptCategory::caption;
    std::string text;          // template with a single {} slot (or none for caption)
    std::string substitution;  // bound filler for color/texture rows

    void validate() const;
};

/// Slot replaced verbatim. Caption templates return the provided substitution
/// (the caption) unchanged. Pure function of its arguments.
std::string render_prompt(const PromptTemplate& tmpl, const std::string& substitution);

struct PromptSuite {
    std::vector<PromptTemplate> templates;

    const PromptTemplate* find(const std::string& variant_name) const;
};

/// Plain-text suite format, one row per line:
///   variant_name|category|template[|substitution]
/// '#' starts a comment line. The shipped default file reproduces the stock
/// background-alteration prompts.
PromptSuite load_prompt_suite(const std::filesystem::path& file);

}  // namespace backdrop::cond
