// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "backdrop/diffusion/schedule.hpp"
#include "backdrop/toy/autoencoder.hpp"
#include "backdrop/toy/classifier.hpp"
#include "backdrop/toy/denoiser.hpp"
#include "backdrop/toy/scenes.hpp"
#include "backdrop/toy/text_encoder.hpp"

namespace backdrop::toy {

struct TrainConfig {
    int train_scenes = 800;
    int test_scenes = 200;
    uint64_t seed = 7;

    int t_train = 1000;
    double beta_min = 1e-4;
    double beta_max = 0.02;

    int latent_channels = 4;
    int ae_base = 16;
    int den_base = 24;
    int clf_base = 16;
    int tokens = 12;
    int text_dim = 16;
    int temb_dim = 16;

    int clf_train_scenes = 2400;  // classifier generalization needs more data
    int batch = 16;
    int ae_epochs = 12;
    int den_epochs = 14;
    int clf_epochs = 10;
    double ae_lr = 2e-3;
    double den_lr = 2e-3;
    double clf_lr = 2e-3;
    float text_drop_prob = 0.1f;  // classifier-free training
    int train_dilation_radius = 6;
};

/// All four trained backends plus the schedule they were trained against.
struct ToyStack {
    TrainConfig config;
    diffusion::NoiseSchedule schedule;
    TinyAutoencoder<float> autoencoder;
    TinyDenoiser<float> denoiser;
    TextEncoder text_encoder;
    TinyClassifier<float> classifier;

    /// Re-derives the denoiser's unconditional (null text) sequence from the
    /// text encoder. Called after training and after loading.
    void refresh_null_text();
};

struct TrainReport {
    double ae_test_mse = 0.0;
    double clf_test_accuracy = 0.0;
    double den_final_train_loss = 0.0;
    double den_val_loss_cond = 0.0;
    double den_val_loss_uncond = 0.0;
    double wall_seconds = 0.0;
};

/// Latent-space conditioning for one scene at training resolution.
struct SceneConditioning {
    Tensorf image_latent;  // (1,Cz,16,16)
    Tensorf mask_latent;   // (1,1,16,16), 1 = regenerate
};

SceneConditioning make_scene_conditioning(const ToyStack& stack, const Image& image,
                                          const cond::ObjectMask& object_mask, int dilation_radius);

/// Individual trainers; all deterministic given seed and config. Throw
/// TrainingError if the loss goes non-finite.
void train_autoencoder(TinyAutoencoder<float>& ae, const std::vector<ShapesScene>& scenes, int epochs,
                       int batch, double lr, uint64_t seed);
double autoencoder_test_mse(const TinyAutoencoder<float>& ae, const std::vector<ShapesScene>& scenes);

void train_classifier(TinyClassifier<float>& clf, const std::vector<ShapesScene>& scenes, int epochs,
                      int batch, double lr, uint64_t seed);
double classifier_accuracy(const TinyClassifier<float>& clf, const std::vector<ShapesScene>& scenes);

void train_denoiser(ToyStack& stack, const std::vector<ShapesScene>& scenes, double* final_loss);

/// Mean noise-prediction loss over scenes at evenly spread timesteps, with
/// and without text conditioning.
void denoiser_validation_loss(const ToyStack& stack, const std::vector<ShapesScene>& scenes,
                              double* cond_loss, double* uncond_loss);

/// Full pipeline: scenes, autoencoder, denoiser + text encoder, classifier.
ToyStack train_toy_stack(const TrainConfig& config, TrainReport* report = nullptr);

/// Weight directory: one self-describing container per backend plus a
/// provenance report (config, seed, metrics).
void save_stack(const ToyStack& stack, const std::filesystem::path& dir, const TrainReport* report = nullptr);
ToyStack load_stack(const std::filesystem::path& dir);

}  // namespace backdrop::toy
