// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#include "backdrop/toy/text_encoder.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace backdrop::toy {

namespace {

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::string current;
    for (char ch : text) {
        if (std::isalpha(static_cast<unsigned char>(ch))) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else if (!current.empty()) {
            words.push_back(current);
            current.clear();
        }
    }
    if (!current.empty()) words.push_back(current);
    return words;
}

}  // namespace

TextEncoder::TextEncoder(const std::vector<std::string>& texts, int tokens, int dim, uint64_t seed)
    : tokens_(tokens), dim_(dim) {
    std::set<std::string> words;
    for (const auto& t : texts)
        for (const auto& w : split_words(t)) words.insert(w);
    vocab_ = {"<pad>", "<unk>"};
    vocab_.insert(vocab_.end(), words.begin(), words.end());
    for (size_t i = 0; i < vocab_.size(); ++i) word_to_id_[vocab_[i]] = static_cast<int>(i);
    Rng rng(stable_hash64(seed, "text_encoder"));
    embedding_ = Tensorf::randn({static_cast<int>(vocab_.size()), dim_}, rng, 0.25f);
}

void TextEncoder::set_vocab(std::vector<std::string> vocab) {
    vocab_ = std::move(vocab);
    word_to_id_.clear();
    for (size_t i = 0; i < vocab_.size(); ++i) word_to_id_[vocab_[i]] = static_cast<int>(i);
    embedding_ = Tensorf::zeros({static_cast<int>(vocab_.size()), dim_});
}

std::vector<int> TextEncoder::tokenize(const std::string& text, bool* truncated) const {
    const auto words = split_words(text);
    if (truncated) *truncated = static_cast<int>(words.size()) > tokens_;
    std::vector<int> ids(static_cast<size_t>(tokens_), 0);
    for (int i = 0; i < tokens_ && i < static_cast<int>(words.size()); ++i) {
        auto it = word_to_id_.find(words[static_cast<size_t>(i)]);
        ids[static_cast<size_t>(i)] = it == word_to_id_.end() ? 1 : it->second;
    }
    return ids;
}

TextEmbedding TextEncoder::encode(const std::string& prompt) const {
    if (embedding_.empty()) throw ValidationError("text encoder has no vocabulary");
    TextEmbedding out;
    const auto ids = tokenize(prompt, &out.truncated);
    out.values = Tensorf({1, tokens_, dim_});
    for (int k = 0; k < tokens_; ++k) {
        const float* src = embedding_.data() + static_cast<size_t>(ids[static_cast<size_t>(k)]) * dim_;
        std::copy_n(src, dim_, out.values.data() + static_cast<size_t>(k) * dim_);
    }
    return out;
}

nn::Var<float> TextEncoder::embed_batch(nn::Binder<float>& bind,
                                        const std::vector<std::vector<int>>& token_ids) const {
    std::vector<int> flat;
    flat.reserve(token_ids.size() * static_cast<size_t>(tokens_));
    for (const auto& ids : token_ids) {
        if (static_cast<int>(ids.size()) != tokens_) throw ValidationError("token sequence length mismatch");
        flat.insert(flat.end(), ids.begin(), ids.end());
    }
    return nn::gather_rows(bind(embedding_), flat, static_cast<int>(token_ids.size()), tokens_);
}

void TextEncoder::collect(const std::string& prefix, std::vector<nn::ParamRef<float>>& out) {
    out.push_back({prefix + ".embedding", &embedding_});
}

}  // namespace backdrop::toy
