// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "backdrop/nn/ops.hpp"

namespace backdrop::nn {

template <class T>
struct ParamRef {
    std::string name;
    Tensor<T>* tensor;
};

/// Maps parameter tensors to tape leaves, one leaf per parameter per graph.
/// A module applied several times in one graph (the denoiser inside the
/// sampling loop) therefore accumulates gradients into a single leaf.
template <class T>
class Binder {
public:
    Binder(Tape<T>& tape, bool requires_grad) : tape_(&tape), requires_grad_(requires_grad) {}

    Var<T> operator()(const Tensor<T>& param) {
        auto it = cache_.find(&param);
        if (it != cache_.end()) return it->second;
        Var<T> v = tape_->leaf(param, requires_grad_);
        cache_.emplace(&param, v);
        return v;
    }

    bool bound(const Tensor<T>& param) const { return cache_.count(&param) > 0; }
    Var<T> var_of(const Tensor<T>& param) const { return cache_.at(&param); }

    /// Gradient of a parameter after backward(); zeros if it was never bound.
    Tensor<T> grad_of(const Tensor<T>& param) const {
        auto it = cache_.find(&param);
        if (it == cache_.end()) return Tensor<T>::zeros(param.shape());
        return tape_->grad(it->second);
    }

private:
    Tape<T>* tape_;
    bool requires_grad_;
    std::unordered_map<const Tensor<T>*, Var<T>> cache_;
};

template <class T>
struct Conv2dLayer {
    Tensor<T> w, b;
    int stride = 1, pad = 1;

    Conv2dLayer() = default;

    Conv2dLayer(int ci, int co, int k, int stride_, int pad_, Rng& rng) : stride(stride_), pad(pad_) {
        const T std_dev = static_cast<T>(std::sqrt(2.0 / (ci * k * k)));
        w = Tensor<T>::randn({co, ci, k, k}, rng, std_dev);
        b = Tensor<T>::zeros({co});
    }

    Var<T> apply(Binder<T>& bind, Var<T> x) const { return conv2d(x, bind(w), bind(b), stride, pad); }

    void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
        out.push_back({prefix + ".w", &w});
        out.push_back({prefix + ".b", &b});
    }
};

template <class T>
struct LinearLayer {
    Tensor<T> w, b;

    LinearLayer() = default;

    LinearLayer(int in, int out, Rng& rng) {
        const T std_dev = static_cast<T>(std::sqrt(2.0 / in));
        w = Tensor<T>::randn({out, in}, rng, std_dev);
        b = Tensor<T>::zeros({out});
    }

    Var<T> apply(Binder<T>& bind, Var<T> x) const { return linear(x, bind(w), bind(b)); }

    void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
        out.push_back({prefix + ".w", &w});
        out.push_back({prefix + ".b", &b});
    }
};

/// Sinusoidal timestep features, precomputed for t in [1, t_train].
template <class T>
Tensor<T> timestep_features(int t, int dim) {
    Tensor<T> out({1, dim});
    const int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / half);
        out[static_cast<size_t>(i)] = static_cast<T>(std::sin(t * freq));
        out[static_cast<size_t>(half + i)] = static_cast<T>(std::cos(t * freq));
    }
    return out;
}

}  // namespace backdrop::nn
