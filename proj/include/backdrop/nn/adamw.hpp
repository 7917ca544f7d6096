// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <unordered_map>

#include "backdrop/core/tensor.hpp"

namespace backdrop::nn {

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;  // decoupled
};

/// Decoupled-weight-decay Adam. State is keyed by parameter address, so one
/// optimizer instance drives any set of tensors (network weights during
/// training, the latent/text pair during attacks).
template <class T>
class AdamW {
public:
    explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {}

    const AdamWConfig& config() const { return cfg_; }

    void set_lr(double lr) { cfg_.lr = lr; }

    void begin_step() { ++step_; }

    void update(Tensor<T>& param, const Tensor<T>& grad) {
        if (!param.same_shape(grad)) throw ValidationError("adamw: gradient shape mismatch");
        State& st = states_[&param];
        if (st.m.empty()) {
            st.m = Tensor<T>::zeros(param.shape());
            st.v = Tensor<T>::zeros(param.shape());
        }
        const double b1 = cfg_.beta1, b2 = cfg_.beta2;
        const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_));
        for (size_t i = 0; i < param.size(); ++i) {
            const double g = static_cast<double>(grad[i]);
            const double m = b1 * static_cast<double>(st.m[i]) + (1.0 - b1) * g;
            const double v = b2 * static_cast<double>(st.v[i]) + (1.0 - b2) * g * g;
            st.m[i] = static_cast<T>(m);
            st.v[i] = static_cast<T>(v);
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            double p = static_cast<double>(param[i]);
            p -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * p);
            param[i] = static_cast<T>(p);
        }
    }

private:
    struct State {
        Tensor<T> m, v;
    };

    AdamWConfig cfg_;
    long step_ = 0;
    std::unordered_map<const void*, State> states_;
};

}  // namespace backdrop::nn
