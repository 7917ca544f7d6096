// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "backdrop/nn/layers.hpp"

namespace backdrop::toy {

/// Token sequence embedding, shape (1, tokens, dim). The all-<pad> sequence
/// is the null (unconditional) embedding.
struct TextEmbedding {
    Tensorf values;
    bool requires_gradient = false;
    bool truncated = false;  // prompt exceeded the token budget
};

/// Word-level embedding lookup trained jointly with the denoiser. Vocabulary
/// is fixed at construction from the training captions plus the prompt
/// suite; unknown words map to <unk>.
class TextEncoder {
public:
    TextEncoder() = default;

    TextEncoder(const std::vector<std::string>& texts, int tokens, int dim, uint64_t seed);

    int tokens() const { return tokens_; }
    int dim() const { return dim_; }
    int vocab_size() const { return static_cast<int>(vocab_.size()); }

    /// Lowercased alpha-word split, padded/truncated to the token budget.
    std::vector<int> tokenize(const std::string& text, bool* truncated = nullptr) const;

    /// Deterministic embedding of a prompt; the empty string yields the null
    /// (all-<pad>) sequence.
    TextEmbedding encode(const std::string& prompt) const;

    /// Training-path lookup: rows gathered on tape so gradients reach the table.
    nn::Var<float> embed_batch(nn::Binder<float>& bind, const std::vector<std::vector<int>>& token_ids) const;

    void collect(const std::string& prefix, std::vector<nn::ParamRef<float>>& out);
    const std::vector<std::string>& vocab() const { return vocab_; }
    void set_vocab(std::vector<std::string> vocab);

    Tensorf& embedding_table() { return embedding_; }

private:
    int tokens_ = 12;
    int dim_ = 16;
    std::vector<std::string> vocab_;
    std::map<std::string, int> word_to_id_;
    Tensorf embedding_;  // (V, dim)
};

}  // namespace backdrop::toy
