// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "backdrop/conditioning/conditioning.hpp"
#include "backdrop/diffusion/composite.hpp"
#include "backdrop/toy/training.hpp"

namespace backdrop::attack {

enum class LossKind { cross_entropy, feature_distance };
enum class OptimVariables { both, text_only, latent_only };

struct AttackConfig {
    int iterations = 30;          // N
    double learning_rate = 0.1;   // AdamW step size
    int start_step = 4;           // remaining DDIM transitions at the optimization point
    LossKind loss_kind = LossKind::cross_entropy;
    OptimVariables variables = OptimVariables::both;
    int dilation_radius = 6;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_weight_decay = 0.01;
    double adam_eps = 1e-8;

    void validate(int grid_length) const {
        if (iterations < 0) throw ValidationError("attack iterations must be >= 0");
        if (!(learning_rate > 0.0)) throw ValidationError("attack learning rate must be > 0");
        if (start_step < 0 || start_step > grid_length)
            throw ValidationError("start_step must lie within [0, grid length]");
    }
};

struct AttackResult {
    Image adversarial_image;         // composited float image of the best iterate
    std::vector<double> loss_trace;  // length N+1, initial value included
    eval::PredictionRecord clean_prediction;
    eval::PredictionRecord adversarial_prediction;
    double effective_perturbation_norm = 0.0;  // L2 of (I_adv - I), unbounded by design
    double initial_loss = 0.0;
    double final_loss = 0.0;
    double best_loss = 0.0;
    int best_iteration = 0;
};

/// Scalar attack objective. cross_entropy treats the input as logits and
/// returns -log softmax(logits)[label]; feature_distance returns the squared
/// L2 distance between the two feature vectors and ignores logits/label.
double adversarial_loss(const std::vector<double>& logits, int label, LossKind kind,
                        const std::vector<double>* clean_features = nullptr,
                        const std::vector<double>* adv_features = nullptr);

// ---- differentiable tail ----------------------------------------------------

/// Constant context for re-running the final DDIM transitions from (z_t, e_T):
/// frozen backends, conditioning latents, the compositing mask and the loss
/// target. Templated so the gradient check can run the whole chain in double.
template <class T>
struct TailContext {
    const diffusion::DenoiserBackend<T>* denoiser = nullptr;
    const toy::TinyAutoencoder<T>* autoencoder = nullptr;
    const toy::TinyClassifier<T>* classifier = nullptr;
    const diffusion::DdimGrid* grid = nullptr;
    const diffusion::NoiseSchedule* schedule = nullptr;
    diffusion::GuidanceConfig guide;
    Tensor<T> image_latent;    // (1,Cz,L,L)
    Tensor<T> mask_latent;     // (1,1,L,L), 1 = regenerate
    Tensor<T> original_image;  // (1,3,H,W)
    Tensor<T> keep_mask;       // (1,1,H,W), 1 = keep original (dilated object)
    int start_step = 4;
    int label = 0;
    LossKind loss_kind = LossKind::cross_entropy;
    Tensor<T> clean_features;  // (1,F), required for feature_distance
};

template <class T>
struct TailEval {
    double loss = 0.0;
    Tensor<T> grad_z;      // dL/dz_t (empty when not requested)
    Tensor<T> grad_text;   // dL/de_T
    Tensor<T> composited;  // (1,3,H,W)
};

/// Runs the remaining transitions, decodes, composites, evaluates the loss
/// and optionally backpropagates to z_t and e_T. No projection or clamping
/// anywhere on the path.
template <class T>
TailEval<T> eval_tail_loss(const TailContext<T>& ctx, const Tensor<T>& z_t, const Tensor<T>& text,
                           bool want_grad_z, bool want_grad_text) {
    nn::Tape<T> tape;
    nn::Binder<T> bind(tape, false);
    nn::Var<T> z = tape.leaf(z_t, want_grad_z);
    nn::Var<T> e = tape.leaf(text, want_grad_text);
    nn::Var<T> i_lat = tape.constant(ctx.image_latent);
    nn::Var<T> m_lat = tape.constant(ctx.mask_latent);

    nn::Var<T> z0 = diffusion::denoise_range(*ctx.denoiser, bind, z, &e, i_lat, m_lat, *ctx.grid, ctx.guide,
                                             *ctx.schedule, ctx.start_step, 0);
    nn::Var<T> decoded = ctx.autoencoder->decode(bind, z0);
    nn::Var<T> comp = nn::lerp_mask(decoded, ctx.original_image, ctx.keep_mask);

    nn::Var<T> loss;
    if (ctx.loss_kind == LossKind::cross_entropy) {
        loss = nn::softmax_cross_entropy(ctx.classifier->logits(bind, comp), {ctx.label});
    } else {
        if (ctx.clean_features.empty()) throw ValidationError("feature_distance needs clean features");
        loss = nn::sq_diff_sum(ctx.classifier->features(bind, comp), tape.constant(ctx.clean_features));
    }

    TailEval<T> out;
    out.loss = static_cast<double>(tape.value(loss)[0]);
    out.composited = tape.value(comp);
    if (want_grad_z || want_grad_text) {
        tape.backward(loss);
        if (want_grad_z) out.grad_z = tape.grad(z);
        if (want_grad_text) out.grad_text = tape.grad(e);
    }
    return out;
}

/// Background attack: one full denoising pass down to start_step, then N
/// AdamW ascent iterations on (z_t, e_T) through the remaining transitions,
/// decoder, composite and classifier. Returns the best-loss iterate.
AttackResult adversarial_background(const Image& image, int label, const cond::ConditioningBundle& bundle,
                                    const toy::ToyStack& stack, const toy::TinyClassifier<float>& classifier,
                                    const diffusion::DdimGrid& grid, const diffusion::GuidanceConfig& guide,
                                    const diffusion::NoiseSchedule& schedule, const AttackConfig& config,
                                    uint64_t seed);

}  // namespace backdrop::attack
