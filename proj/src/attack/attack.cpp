// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#include "backdrop/attack/attack.hpp"

#include <cmath>

#include "backdrop/nn/adamw.hpp"

namespace backdrop::attack {

double adversarial_loss(const std::vector<double>& logits, int label, LossKind kind,
                        const std::vector<double>* clean_features, const std::vector<double>* adv_features) {
    if (kind == LossKind::feature_distance) {
        if (clean_features == nullptr || adv_features == nullptr)
            throw ValidationError("feature_distance requires both feature vectors");
        if (clean_features->size() != adv_features->size())
            throw ValidationError("feature vectors differ in size");
        double acc = 0.0;
        for (size_t i = 0; i < clean_features->size(); ++i) {
            const double d = (*clean_features)[i] - (*adv_features)[i];
            acc += d * d;
        }
        return acc;
    }
    if (logits.empty()) throw ValidationError("empty logit vector");
    if (label < 0 || label >= static_cast<int>(logits.size())) throw ValidationError("label out of range");
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : logits) z += std::exp(v - mx);
    return -(logits[static_cast<size_t>(label)] - mx - std::log(z));
}

namespace {

Tensorf keep_mask_from(const cond::ObjectMask& dilated) {
    const int H = dilated.height(), W = dilated.width();
    Tensorf keep({1, 1, H, W});
    for (size_t i = 0; i < dilated.values.size(); ++i) keep[i] = dilated.values[i] ? 1.0f : 0.0f;
    return keep;
}

}  // namespace

AttackResult adversarial_background(const Image& image, int label, const cond::ConditioningBundle& bundle,
                                    const toy::ToyStack& stack, const toy::TinyClassifier<float>& classifier,
                                    const diffusion::DdimGrid& grid, const diffusion::GuidanceConfig& guide,
                                    const diffusion::NoiseSchedule& schedule, const AttackConfig& config,
                                    uint64_t seed) {
    guide.validate();
    config.validate(grid.length());

    const int H = image.dim(1), W = image.dim(2);
    const toy::SceneConditioning sc =
        toy::make_scene_conditioning(stack, image, bundle.mask, config.dilation_radius);
    const cond::ObjectMask dilated = cond::dilate_mask(bundle.mask, config.dilation_radius);

    TailContext<float> ctx;
    ctx.denoiser = &stack.denoiser;
    ctx.autoencoder = &stack.autoencoder;
    ctx.classifier = &classifier;
    ctx.grid = &grid;
    ctx.schedule = &schedule;
    ctx.guide = guide;
    ctx.image_latent = sc.image_latent;
    ctx.mask_latent = sc.mask_latent;
    ctx.original_image = image.reshaped({1, 3, H, W});
    ctx.keep_mask = keep_mask_from(dilated);
    ctx.start_step = config.start_step;
    ctx.label = label;
    ctx.loss_kind = config.loss_kind;

    // Seeded start latent, identical to what plain sampling would draw.
    const int start = diffusion::strength_steps(guide.strength, grid.length());
    if (config.start_step > start)
        throw ValidationError("start_step exceeds the transitions this strength traverses");
    Rng rng(seed);
    Tensorf z_init(sc.image_latent.shape());
    if (guide.strength >= 1.0f) {
        for (size_t i = 0; i < z_init.size(); ++i) z_init[i] = static_cast<float>(rng.normal());
    } else {
        Tensorf eps(sc.image_latent.shape());
        for (size_t i = 0; i < eps.size(); ++i) eps[i] = static_cast<float>(rng.normal());
        z_init = diffusion::forward_noise(sc.image_latent, grid.steps[static_cast<size_t>(start - 1)], eps,
                                          schedule);
    }

    // One pass down to the optimization point.
    Tensorf z_t = z_init;
    Tensorf text = stack.text_encoder.encode(bundle.prompt_text).values;
    if (config.start_step < start) {
        nn::Tape<float> tape;
        nn::Binder<float> bind(tape, false);
        nn::Var<float> z = tape.constant(z_init);
        nn::Var<float> e = tape.constant(text);
        nn::Var<float> i_lat = tape.constant(sc.image_latent);
        nn::Var<float> m_lat = tape.constant(sc.mask_latent);
        z = diffusion::denoise_range(stack.denoiser, bind, z, &e, i_lat, m_lat, grid, guide, schedule, start,
                                     config.start_step);
        z_t = tape.value(z);
    }

    // Clean reference: the unmodified tail. Its composite is the natural
    // sample for this seed, classified for the baseline record.
    const bool want_gz = config.variables != OptimVariables::text_only;
    const bool want_ge = config.variables != OptimVariables::latent_only;
    if (config.loss_kind == LossKind::feature_distance) {
        const auto clean_feat = classifier.feature_vector(image);
        ctx.clean_features = Tensorf({1, static_cast<int>(clean_feat.size())});
        for (size_t i = 0; i < clean_feat.size(); ++i) ctx.clean_features[i] = static_cast<float>(clean_feat[i]);
    }

    AttackResult result;
    result.clean_prediction = classifier.classify(image);
    result.clean_prediction.true_label = label;

    nn::AdamW<float> opt({config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps,
                          config.adam_weight_decay});

    Tensorf best_image;
    double best_loss = -std::numeric_limits<double>::infinity();
    int best_iter = 0;

    for (int n = 0; n <= config.iterations; ++n) {
        const bool need_grad = n < config.iterations;
        TailEval<float> ev = eval_tail_loss(ctx, z_t, text, need_grad && want_gz, need_grad && want_ge);
        if (!std::isfinite(ev.loss)) throw NumericalError("attack loss went non-finite", n);
        result.loss_trace.push_back(ev.loss);
        if (ev.loss > best_loss) {
            best_loss = ev.loss;
            best_iter = n;
            best_image = ev.composited;
        }
        if (!need_grad) break;

        // Ascent: feed the optimizer the negated gradients, no projection.
        opt.begin_step();
        if (want_gz) {
            if (!ev.grad_z.all_finite()) throw NumericalError("attack gradient went non-finite", n);
            Tensorf neg(ev.grad_z.shape());
            for (size_t i = 0; i < neg.size(); ++i) neg[i] = -ev.grad_z[i];
            opt.update(z_t, neg);
        }
        if (want_ge) {
            if (!ev.grad_text.all_finite()) throw NumericalError("attack gradient went non-finite", n);
            Tensorf neg(ev.grad_text.shape());
            for (size_t i = 0; i < neg.size(); ++i) neg[i] = -ev.grad_text[i];
            opt.update(text, neg);
        }
    }

    result.initial_loss = result.loss_trace.front();
    result.final_loss = result.loss_trace.back();
    result.best_loss = best_loss;
    result.best_iteration = best_iter;
    result.adversarial_image = best_image.reshaped({3, H, W});
    result.adversarial_prediction = classifier.classify(result.adversarial_image);
    result.adversarial_prediction.true_label = label;

    double norm = 0.0;
    for (size_t i = 0; i < image.size(); ++i) {
        const double d = static_cast<double>(result.adversarial_image[i]) - static_cast<double>(image[i]);
        norm += d * d;
    }
    result.effective_perturbation_norm = std::sqrt(norm);
    return result;
}

}  // namespace backdrop::attack
