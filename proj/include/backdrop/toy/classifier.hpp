// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "backdrop/eval/prediction.hpp"
#include "backdrop/nn/layers.hpp"

namespace backdrop::toy {

/// Small convnet over 64x64 RGB images. Smooth activations throughout so the
/// attack objective is differentiable; the penultimate activations double as
/// the feature extractor for the feature-space loss and distribution metrics.
/// The head flattens the final 4x4 map instead of pooling it: shape identity
/// lives in the spatial layout.
template <class T>
struct TinyClassifier {
    nn::Conv2dLayer<T> c1, c2, c3, c4;
    nn::LinearLayer<T> fc_feat, fc_out;
    int num_classes = 8;

    TinyClassifier() = default;

    TinyClassifier(int base, int num_classes_, uint64_t seed, int input_size = 64) : num_classes(num_classes_) {
        Rng rng(stable_hash64(seed, "classifier"));
        c1 = nn::Conv2dLayer<T>(3, base, 3, 2, 1, rng);
        c2 = nn::Conv2dLayer<T>(base, 2 * base, 3, 2, 1, rng);
        c3 = nn::Conv2dLayer<T>(2 * base, 3 * base, 3, 2, 1, rng);
        c4 = nn::Conv2dLayer<T>(3 * base, 4 * base, 3, 2, 1, rng);
        const int cells = (input_size / 16) * (input_size / 16);
        fc_feat = nn::LinearLayer<T>(4 * base * cells, 3 * base, rng);
        fc_out = nn::LinearLayer<T>(3 * base, num_classes, rng);
    }

    /// Penultimate features, (N, 3*base).
    nn::Var<T> features(nn::Binder<T>& bind, nn::Var<T> img) const {
        nn::Var<T> h = nn::silu(c1.apply(bind, img));
        h = nn::silu(c2.apply(bind, h));
        h = nn::silu(c3.apply(bind, h));
        h = nn::silu(c4.apply(bind, h));
        const Tensor<T>& hv = h.tape->value(h);
        nn::Var<T> flat = nn::reshape(h, {hv.dim(0), hv.dim(1) * hv.dim(2) * hv.dim(3)});
        return nn::silu(fc_feat.apply(bind, flat));
    }

    nn::Var<T> logits(nn::Binder<T>& bind, nn::Var<T> img) const { return fc_out.apply(bind, features(bind, img)); }

    /// Softmax confidences for a single CHW image.
    std::vector<double> confidences(const Tensor<T>& chw_image) const {
        nn::Tape<T> tape;
        nn::Binder<T> bind(tape, false);
        nn::Var<T> lg = logits(bind, tape.constant(chw_image.reshaped(
                                    {1, chw_image.dim(0), chw_image.dim(1), chw_image.dim(2)})));
        const Tensor<T>& v = tape.value(lg);
        double mx = static_cast<double>(v[0]);
        for (size_t i = 1; i < v.size(); ++i) mx = std::max(mx, static_cast<double>(v[i]));
        double z = 0.0;
        std::vector<double> probs(v.size());
        for (size_t i = 0; i < v.size(); ++i) {
            probs[i] = std::exp(static_cast<double>(v[i]) - mx);
            z += probs[i];
        }
        for (auto& p : probs) p /= z;
        return probs;
    }

    eval::PredictionRecord classify(const Tensor<T>& chw_image) const {
        eval::PredictionRecord rec;
        rec.confidence_vector = confidences(chw_image);
        rec.predicted_label = eval::argmax_lowest_tie(rec.confidence_vector);
        return rec;
    }

    /// Penultimate features for a single CHW image, as doubles.
    std::vector<double> feature_vector(const Tensor<T>& chw_image) const {
        nn::Tape<T> tape;
        nn::Binder<T> bind(tape, false);
        nn::Var<T> f = features(bind, tape.constant(chw_image.reshaped(
                                    {1, chw_image.dim(0), chw_image.dim(1), chw_image.dim(2)})));
        const Tensor<T>& v = tape.value(f);
        std::vector<double> out(v.size());
        for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(v[i]);
        return out;
    }

    void collect(const std::string& prefix, std::vector<nn::ParamRef<T>>& out) {
        c1.collect(prefix + ".c1", out);
        c2.collect(prefix + ".c2", out);
        c3.collect(prefix + ".c3", out);
        c4.collect(prefix + ".c4", out);
        fc_feat.collect(prefix + ".fc_feat", out);
        fc_out.collect(prefix + ".fc_out", out);
    }
};

}  // namespace backdrop::toy
