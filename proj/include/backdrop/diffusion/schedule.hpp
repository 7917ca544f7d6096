// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "backdrop/core/tensor.hpp"

namespace backdrop::diffusion {

/// Variance schedule tables for the forward noising process and DDIM
/// stepping. Index convention: betas[i] is the beta at timestep t = i+1; the
/// boundary cumulative product at t = 0 is exactly 1.
struct NoiseSchedule {
    std::vector<double> betas;
    std::vector<double> alphas;
    std::vector<double> alpha_bars;

    int t_train() const { return static_cast<int>(betas.size()); }

    /// Cumulative product at timestep t in [0, t_train]; alpha_bar(0) == 1.
    double alpha_bar(int t) const {
        if (t < 0 || t > t_train()) throw ValidationError("alpha_bar: timestep out of range");
        return t == 0 ? 1.0 : alpha_bars[static_cast<size_t>(t - 1)];
    }
};

/// Betas interpolate linearly from beta_min to beta_max over t_train steps.
NoiseSchedule make_linear_schedule(int t_train, double beta_min, double beta_max);

/// sqrt(abar_t)*x0 + sqrt(1-abar_t)*eps.
template <class T>
Tensor<T> forward_noise(const Tensor<T>& x0, int t, const Tensor<T>& eps, const NoiseSchedule& schedule) {
    if (!x0.same_shape(eps)) throw ValidationError("forward_noise: shape mismatch");
    if (t < 1 || t > schedule.t_train()) throw ValidationError("forward_noise: timestep out of range");
    const double abar = schedule.alpha_bar(t);
    const T a = static_cast<T>(std::sqrt(abar));
    const T s = static_cast<T>(std::sqrt(1.0 - abar));
    Tensor<T> out(x0.shape());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + s * eps[i];
    return out;
}

/// The subsequence of training timesteps a sampling run visits, ascending.
/// Consecutive pairs define the (t, t_prev) transitions; below the smallest
/// step the chain targets the alpha_bar(0) = 1 boundary.
struct DdimGrid {
    std::vector<int> steps;

    int length() const { return static_cast<int>(steps.size()); }

    /// Evenly spaced grid: step_i = floor(i * t_train / t_sample), i = 1..t_sample.
    static DdimGrid even(int t_train, int t_sample);
};

struct GuidanceConfig {
    float lambda = 7.5f;   // classifier-free guidance scale
    float strength = 1.0f; // fraction of the grid actually traversed

    void validate() const {
        if (lambda < 0.0f) throw ValidationError("guidance lambda must be >= 0");
        if (!(strength > 0.0f && strength <= 1.0f)) throw ValidationError("strength must be in (0,1]");
    }
};

}  // namespace backdrop::diffusion
