// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "backdrop/diffusion/schedule.hpp"
#include "backdrop/nn/layers.hpp"

namespace backdrop::diffusion {

/// A latent at a named position on the DDIM grid. timestep_index counts the
/// transitions remaining to reach the clean latent (0 = clean).
template <class T>
struct LatentState {
    Tensor<T> values;
    int timestep_index = 0;
};

/// Inputs the denoiser is conditioned on. mask_latent marks the region to
/// regenerate (1 = background) at latent resolution, values in [0,1] after
/// downsampling. text_embedding is (1, tokens, embed_dim).
template <class T>
struct InpaintConditioning {
    Tensor<T> image_latent;
    Tensor<T> mask_latent;
    Tensor<T> text_embedding;
    bool has_text = true;
};

/// Noise-prediction backend. `text == nullptr` selects the unconditional
/// branch (backends realise it with their learned null embedding). Operates
/// on tape variables so gradients can flow through sampling when a caller
/// differentiates; plain generation simply discards the tape.
template <class T>
class DenoiserBackend {
public:
    virtual ~DenoiserBackend() = default;

    virtual nn::Var<T> predict(nn::Binder<T>& bind, nn::Var<T> z, int t, const nn::Var<T>* text,
                               nn::Var<T> image_latent, nn::Var<T> mask_latent) const = 0;
};

// ---- guidance combination ---------------------------------------------------

/// eps_uncond + lambda * (eps_cond - eps_uncond), elementwise. The lambda in
/// {0,1} reductions return the corresponding branch bit-exactly (floating
/// point would not guarantee that for the general formula at lambda = 1).
template <class T>
Tensor<T> cfg_combine(const Tensor<T>& eps_uncond, const Tensor<T>& eps_cond, T lambda) {
    if (!eps_uncond.same_shape(eps_cond)) throw ValidationError("cfg_combine: shape mismatch");
    if (lambda == T(0)) return eps_uncond;
    if (lambda == T(1)) return eps_cond;
    Tensor<T> out(eps_uncond.shape());
    for (size_t i = 0; i < out.size(); ++i) out[i] = eps_uncond[i] + lambda * (eps_cond[i] - eps_uncond[i]);
    return out;
}

template <class T>
nn::Var<T> cfg_combine(nn::Var<T> eps_uncond, nn::Var<T> eps_cond, T lambda) {
    if (!eps_uncond.tape->value(eps_uncond).same_shape(eps_cond.tape->value(eps_cond)))
        throw ValidationError("cfg_combine: shape mismatch");
    if (lambda == T(0)) return eps_uncond;
    if (lambda == T(1)) return eps_cond;
    nn::Var<T> diff = nn::sub(eps_cond, eps_uncond);
    return nn::affine(eps_uncond, T(1), diff, lambda);
}

// ---- DDIM update ------------------------------------------------------------

/// Deterministic latent update: predict x0 from (z_t, eps_hat), then step to
/// t_prev. t_prev = 0 targets the alpha_bar(0) = 1 boundary and returns the
/// x0 prediction itself.
template <class T>
Tensor<T> ddim_step(const Tensor<T>& z, const Tensor<T>& eps_hat, int t, int t_prev,
                    const NoiseSchedule& schedule) {
    if (!z.same_shape(eps_hat)) throw ValidationError("ddim_step: shape mismatch");
    if (t_prev >= t) throw ValidationError("ddim_step: t_prev must be below t");
    if (t < 1 || t > schedule.t_train() || t_prev < 0) throw ValidationError("ddim_step: timestep out of range");
    const double abar_t = schedule.alpha_bar(t);
    const double abar_p = schedule.alpha_bar(t_prev);
    const T a_t = static_cast<T>(std::sqrt(abar_t));
    const T s_t = static_cast<T>(std::sqrt(1.0 - abar_t));
    const T a_p = static_cast<T>(std::sqrt(abar_p));
    const T s_p = static_cast<T>(std::sqrt(1.0 - abar_p));
    Tensor<T> out(z.shape());
    for (size_t i = 0; i < out.size(); ++i) {
        const T x0_pred = (z[i] - s_t * eps_hat[i]) / a_t;
        out[i] = a_p * x0_pred + s_p * eps_hat[i];
    }
    return out;
}

template <class T>
nn::Var<T> ddim_step(nn::Var<T> z, nn::Var<T> eps_hat, int t, int t_prev, const NoiseSchedule& schedule) {
    if (t_prev >= t) throw ValidationError("ddim_step: t_prev must be below t");
    if (t < 1 || t > schedule.t_train() || t_prev < 0) throw ValidationError("ddim_step: timestep out of range");
    const double abar_t = schedule.alpha_bar(t);
    const double abar_p = schedule.alpha_bar(t_prev);
    const T a_t = static_cast<T>(std::sqrt(abar_t));
    const T s_t = static_cast<T>(std::sqrt(1.0 - abar_t));
    const T a_p = static_cast<T>(std::sqrt(abar_p));
    const T s_p = static_cast<T>(std::sqrt(1.0 - abar_p));
    nn::Var<T> x0_pred = nn::scale(nn::affine(z, T(1), eps_hat, -s_t), T(1) / a_t);
    return nn::affine(x0_pred, a_p, eps_hat, s_p);
}

// ---- sampling ---------------------------------------------------------------

template <class T>
struct SampleResult {
    Tensor<T> final_latent;
    std::vector<LatentState<T>> trajectory;  // start state first, clean latent last
};

/// Number of grid transitions a given strength traverses: ceil(strength * length).
inline int strength_steps(float strength, int grid_length) {
    const int n = static_cast<int>(std::ceil(static_cast<double>(strength) * grid_length));
    return std::min(std::max(n, 1), grid_length);
}

/// Runs transitions from grid position `from_index` down to `to_index`
/// (positions count remaining transitions). Each transition queries the
/// denoiser twice (conditional and unconditional), combines the estimates
/// and applies the DDIM update. Throws NumericalError at the offending
/// training timestep when a prediction goes non-finite.
template <class T>
nn::Var<T> denoise_range(const DenoiserBackend<T>& denoiser, nn::Binder<T>& bind, nn::Var<T> z,
                         const nn::Var<T>* text, nn::Var<T> image_latent, nn::Var<T> mask_latent,
                         const DdimGrid& grid, const GuidanceConfig& guide, const NoiseSchedule& schedule,
                         int from_index, int to_index, std::vector<LatentState<T>>* trajectory = nullptr) {
    nn::Tape<T>& tape = *z.tape;
    for (int k = from_index - 1; k >= to_index; --k) {
        const int t = grid.steps[static_cast<size_t>(k)];
        const int t_prev = k > 0 ? grid.steps[static_cast<size_t>(k - 1)] : 0;
        nn::Var<T> eps_uncond = denoiser.predict(bind, z, t, nullptr, image_latent, mask_latent);
        nn::Var<T> eps_cond = text != nullptr ? denoiser.predict(bind, z, t, text, image_latent, mask_latent)
                                              : eps_uncond;
        if (!tape.value(eps_uncond).all_finite() || !tape.value(eps_cond).all_finite())
            throw NumericalError("denoiser produced non-finite output", t);
        nn::Var<T> eps_hat = cfg_combine(eps_uncond, eps_cond, static_cast<T>(guide.lambda));
        z = ddim_step(z, eps_hat, t, t_prev, schedule);
        if (trajectory) trajectory->push_back({tape.value(z), k});
    }
    return z;
}

/// Full sampling run. strength = 1 starts from seeded Gaussian noise;
/// strength < 1 forward-noises the image latent to the entry position and
/// traverses only the remaining transitions. Deterministic given identical
/// inputs and seed.
template <class T>
SampleResult<T> sample(const DenoiserBackend<T>& denoiser, const InpaintConditioning<T>& cond,
                       const DdimGrid& grid, const GuidanceConfig& guide, const NoiseSchedule& schedule,
                       uint64_t seed) {
    guide.validate();
    if (grid.length() < 1) throw ValidationError("sample: empty grid");
    if (cond.image_latent.rank() != 4 || cond.mask_latent.rank() != 4)
        throw ValidationError("sample: rank-4 conditioning expected");
    if (cond.image_latent.dim(2) != cond.mask_latent.dim(2) ||
        cond.image_latent.dim(3) != cond.mask_latent.dim(3))
        throw ValidationError("sample: conditioning spatial shape mismatch");

    const int start = strength_steps(guide.strength, grid.length());
    Rng rng(seed);
    Tensor<T> z0(cond.image_latent.shape());
    if (guide.strength >= 1.0f) {
        for (size_t i = 0; i < z0.size(); ++i) z0[i] = static_cast<T>(rng.normal());
    } else {
        Tensor<T> eps(cond.image_latent.shape());
        for (size_t i = 0; i < eps.size(); ++i) eps[i] = static_cast<T>(rng.normal());
        z0 = forward_noise(cond.image_latent, grid.steps[static_cast<size_t>(start - 1)], eps, schedule);
    }

    nn::Tape<T> tape;
    nn::Binder<T> bind(tape, false);
    nn::Var<T> z = tape.constant(z0);
    nn::Var<T> i_lat = tape.constant(cond.image_latent);
    nn::Var<T> m_lat = tape.constant(cond.mask_latent);
    nn::Var<T> text = tape.constant(cond.text_embedding);

    SampleResult<T> result;
    result.trajectory.push_back({z0, start});
    z = denoise_range(denoiser, bind, z, cond.has_text ? &text : nullptr, i_lat, m_lat, grid, guide,
                      schedule, start, 0, &result.trajectory);
    result.final_latent = tape.value(z);
    return result;
}

}  // namespace backdrop::diffusion
