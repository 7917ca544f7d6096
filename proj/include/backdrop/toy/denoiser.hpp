// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "backdrop/diffusion/sampler.hpp"
#include "backdrop/nn/layers.hpp"

namespace backdrop::toy {

/// Conditional noise predictor on latents. Inpainting conditioning enters as
/// channel concatenation of (z_t, i*(1-m), m) where m marks the region to
/// regenerate; the timestep embedding is added per block and the pooled text
/// embedding modulates each block feature-wise. Encoder-decoder with skip
/// connections over 16 -> 8 -> 4 resolutions.
template <class T>
struct TinyDenoiser : diffusion::DenoiserBackend<T> {
    struct Block {
        nn::Conv2dLayer<T> conv;
        nn::LinearLayer<T> t_proj;
        nn::LinearLayer<T> txt_scale, txt_shift;

        Block() = default;

        Block(int ci, int co, int temb, int txt, Rng& rng)
            : conv(ci, co, 3, 1, 1, rng), t_proj(temb, co, rng), txt_scale(txt, co, rng), txt_shift(txt, co, rng) {
            // Start as identity modulation.
            for (auto& v : txt_scale.w.vec()) v *= T(0.1);
            for (auto& v : txt_shift.w.vec()) v *= T(0.1);
        }

        nn::Var<T> apply(nn::Binder<T>& bind, nn::Var<T> x, nn::Var<T> temb, nn::Var<T> txt_pool) const {
            nn::Var<T> h = conv.apply(bind, x);
            h = nn::add_channel(h, t_proj.apply(bind, temb));
            h = nn::film(h, txt_scale.apply(bind, txt_pool), txt_shift.apply(bind, txt_pool));
            return nn::silu(h);
        }

        void collect(const std::string& prefix, std::vector<nn::ParamRef<T>>& out) {
            conv.collect(prefix + ".conv", out);
            t_proj.collect(prefix + ".t_proj", out);
            txt_scale.collect(prefix + ".txt_scale", out);
            txt_shift.collect(prefix + ".txt_shift", out);
        }
    };

    int latent_channels = 4;
    int temb_dim = 16;
    int text_dim = 16;
    nn::Conv2dLayer<T> in_conv;
    Block b16, b8, b4, u8, u16;
    nn::Conv2dLayer<T> down8, down4;
    nn::Conv2dLayer<T> out_conv;
    Tensor<T> null_text;  // (1, tokens, text_dim); refreshed from the text encoder

    TinyDenoiser() = default;

    TinyDenoiser(int base, int latent_channels_, int temb_dim_, int text_dim_, uint64_t seed)
        : latent_channels(latent_channels_), temb_dim(temb_dim_), text_dim(text_dim_) {
        Rng rng(stable_hash64(seed, "denoiser"));
        in_conv = nn::Conv2dLayer<T>(2 * latent_channels + 1, base, 3, 1, 1, rng);
        b16 = Block(base, base, temb_dim, text_dim, rng);
        down8 = nn::Conv2dLayer<T>(base, 2 * base, 3, 2, 1, rng);
        b8 = Block(2 * base, 2 * base, temb_dim, text_dim, rng);
        down4 = nn::Conv2dLayer<T>(2 * base, 2 * base, 3, 2, 1, rng);
        b4 = Block(2 * base, 2 * base, temb_dim, text_dim, rng);
        u8 = Block(4 * base, 2 * base, temb_dim, text_dim, rng);
        u16 = Block(3 * base, base, temb_dim, text_dim, rng);
        out_conv = nn::Conv2dLayer<T>(base, latent_channels, 3, 1, 1, rng);
        // Near-zero initial prediction helps early training stability.
        for (auto& v : out_conv.w.vec()) v *= T(0.1);
    }

    /// Batched forward with one timestep per sample. text_seq is (N,Tk,D).
    nn::Var<T> forward(nn::Binder<T>& bind, nn::Var<T> z, const std::vector<int>& timesteps,
                       nn::Var<T> text_seq, nn::Var<T> image_latent, nn::Var<T> mask_latent) const {
        nn::Tape<T>& tape = *z.tape;
        const Tensor<T>& vz = tape.value(z);
        const int N = vz.dim(0);
        if (static_cast<int>(timesteps.size()) != N) throw ValidationError("denoiser: timestep count mismatch");

        Tensor<T> temb({N, temb_dim});
        for (int n = 0; n < N; ++n) {
            Tensor<T> feat = nn::timestep_features<T>(timesteps[static_cast<size_t>(n)], temb_dim);
            std::copy_n(feat.data(), temb_dim, temb.data() + static_cast<size_t>(n) * temb_dim);
        }
        nn::Var<T> temb_v = tape.constant(std::move(temb));
        nn::Var<T> txt_pool = nn::mean_tokens(text_seq);

        // i * (1 - m): the known (object) region of the image latent.
        const Tensor<T>& m = tape.value(mask_latent);
        nn::Var<T> masked_image = nn::lerp_mask(image_latent, Tensor<T>::zeros(tape.value(image_latent).shape()), m);

        nn::Var<T> h = nn::silu(in_conv.apply(bind, nn::concat_channels<T>({z, masked_image, mask_latent})));
        nn::Var<T> s16 = b16.apply(bind, h, temb_v, txt_pool);
        nn::Var<T> s8 = b8.apply(bind, nn::silu(down8.apply(bind, s16)), temb_v, txt_pool);
        nn::Var<T> mid = b4.apply(bind, nn::silu(down4.apply(bind, s8)), temb_v, txt_pool);
        nn::Var<T> up1 = u8.apply(bind, nn::concat_channels<T>({nn::upsample2x(mid), s8}), temb_v, txt_pool);
        nn::Var<T> up2 = u16.apply(bind, nn::concat_channels<T>({nn::upsample2x(up1), s16}), temb_v, txt_pool);
        return out_conv.apply(bind, up2);
    }

    nn::Var<T> predict(nn::Binder<T>& bind, nn::Var<T> z, int t, const nn::Var<T>* text,
                       nn::Var<T> image_latent, nn::Var<T> mask_latent) const override {
        nn::Tape<T>& tape = *z.tape;
        const int N = tape.value(z).dim(0);
        nn::Var<T> text_seq;
        if (text != nullptr) {
            text_seq = *text;
        } else {
            if (null_text.empty()) throw ValidationError("denoiser null text embedding not set");
            text_seq = tape.constant(null_text);
        }
        return forward(bind, z, std::vector<int>(static_cast<size_t>(N), t), text_seq, image_latent, mask_latent);
    }

    void collect(const std::string& prefix, std::vector<nn::ParamRef<T>>& out) {
        in_conv.collect(prefix + ".in_conv", out);
        b16.collect(prefix + ".b16", out);
        down8.collect(prefix + ".down8", out);
        b8.collect(prefix + ".b8", out);
        down4.collect(prefix + ".down4", out);
        b4.collect(prefix + ".b4", out);
        u8.collect(prefix + ".u8", out);
        u16.collect(prefix + ".u16", out);
        out_conv.collect(prefix + ".out_conv", out);
    }
};

}  // namespace backdrop::toy
