// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#include "backdrop/conditioning/prompts.hpp"

#include <fstream>

#include "backdrop/core/errors.hpp"

namespace backdrop::cond {

namespace {

int count_slots(const std::string& text) {
    int n = 0;
    for (size_t i = 0; i + 1 < text.size(); ++i)
        if (text[i] == '{' && text[i + 1] == '}') ++n;
    return n;
}

}  // namespace

std::string to_string(PromptCategory c) {
    switch (c) {
        case PromptCategory::class_label: return "class_label";
        case PromptCategory::caption: return "caption";
        case PromptCategory::color: return "color";
        case PromptCategory::texture: return "texture";
    }
    return "?";
}

PromptCategory prompt_category_from_string(const std::string& s) {
    if (s == "class_label") return PromptCategory::class_label;
    if (s == "caption") return PromptCategory::caption;
    if (s == "color") return PromptCategory::color;
    if (s == "texture") return PromptCategory::texture;
    throw ValidationError("unknown prompt category: " + s);
}

void PromptTemplate::validate() const {
    if (variant_name.empty()) throw ValidationError("prompt variant_name must not be empty");
    const int slots = count_slots(text);
    if (category == PromptCategory::caption) {
        if (slots != 0) throw ValidationError("caption templates take no slot: " + variant_name);
    } else {
        if (slots != 1) throw ValidationError("template needs exactly one {} slot: " + variant_name);
    }
    if ((category == PromptCategory::color || category == PromptCategory::texture) && substitution.empty())
        throw ValidationError("color/texture rows must bind a substitution: " + variant_name);
}

std::string render_prompt(const PromptTemplate& tmpl, const std::string& substitution) {
    if (tmpl.category == PromptCategory::caption) return substitution;
    if (substitution.empty()) throw ValidationError("missing substitution for template " + tmpl.variant_name);
    const size_t pos = tmpl.text.find("{}");
    if (pos == std::string::npos) throw ValidationError("template has no slot: " + tmpl.variant_name);
    std::string out = tmpl.text;
    out.replace(pos, 2, substitution);
    return out;
}

const PromptTemplate* PromptSuite::find(const std::string& variant_name) const {
    for (const auto& t : templates)
        if (t.variant_name == variant_name) return &t;
    return nullptr;
}

PromptSuite load_prompt_suite(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ValidationError("cannot open prompt suite: " + file.string());
    PromptSuite suite;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        // Manual split: trailing empty fields are significant (caption rows
        // carry an empty template).
        std::vector<std::string> fields{""};
        for (char ch : line) {
            if (ch == '|')
                fields.emplace_back();
            else
                fields.back().push_back(ch);
        }
        if (fields.size() < 3 || fields.size() > 4)
            throw ValidationError("prompt suite line " + std::to_string(lineno) + ": expected 3 or 4 fields");
        PromptTemplate t;
        t.variant_name = fields[0];
        t.category = prompt_category_from_string(fields[1]);
        t.text = fields[2];
        if (fields.size() == 4) t.substitution = fields[3];
        t.validate();
        if (suite.find(t.variant_name)) throw ValidationError("duplicate prompt variant: " + t.variant_name);
        suite.templates.push_back(std::move(t));
    }
    return suite;
}

}  // namespace backdrop::cond
