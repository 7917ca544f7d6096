// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "backdrop/nn/layers.hpp"

namespace backdrop::toy {

/// Small convolutional autoencoder mapping images to latents at 1/4 spatial
/// resolution (64x64x3 -> 16x16xCz) and back. Linear output head; values are
/// only clamped at quantization time so the attack path stays smooth.
template <class T>
struct TinyAutoencoder {
    nn::Conv2dLayer<T> enc1, enc2, enc3, enc_head;
    nn::Conv2dLayer<T> dec1, dec2, dec3, dec_head;
    int latent_channels = 4;

    TinyAutoencoder() = default;

    TinyAutoencoder(int base, int latent_channels_, uint64_t seed) : latent_channels(latent_channels_) {
        Rng rng(stable_hash64(seed, "autoencoder"));
        enc1 = nn::Conv2dLayer<T>(3, base, 3, 1, 1, rng);
        enc2 = nn::Conv2dLayer<T>(base, 2 * base, 3, 2, 1, rng);
        enc3 = nn::Conv2dLayer<T>(2 * base, 2 * base, 3, 2, 1, rng);
        enc_head = nn::Conv2dLayer<T>(2 * base, latent_channels, 3, 1, 1, rng);
        dec1 = nn::Conv2dLayer<T>(latent_channels, 2 * base, 3, 1, 1, rng);
        dec2 = nn::Conv2dLayer<T>(2 * base, 2 * base, 3, 1, 1, rng);
        dec3 = nn::Conv2dLayer<T>(2 * base, base, 3, 1, 1, rng);
        dec_head = nn::Conv2dLayer<T>(base, 3, 3, 1, 1, rng);
    }

    nn::Var<T> encode(nn::Binder<T>& bind, nn::Var<T> img) const {
        nn::Var<T> h = nn::silu(enc1.apply(bind, img));
        h = nn::silu(enc2.apply(bind, h));
        h = nn::silu(enc3.apply(bind, h));
        return enc_head.apply(bind, h);
    }

    nn::Var<T> decode(nn::Binder<T>& bind, nn::Var<T> z) const {
        nn::Var<T> h = nn::silu(dec1.apply(bind, z));
        h = nn::upsample2x(h);
        h = nn::silu(dec2.apply(bind, h));
        h = nn::upsample2x(h);
        h = nn::silu(dec3.apply(bind, h));
        return dec_head.apply(bind, h);
    }

    /// (1,3,H,W) -> (1,Cz,H/4,W/4) without keeping the graph.
    Tensor<T> encode_plain(const Tensor<T>& img) const {
        nn::Tape<T> tape;
        nn::Binder<T> bind(tape, false);
        return tape.value(encode(bind, tape.constant(img)));
    }

    Tensor<T> decode_plain(const Tensor<T>& z) const {
        nn::Tape<T> tape;
        nn::Binder<T> bind(tape, false);
        return tape.value(decode(bind, tape.constant(z)));
    }

    void collect(const std::string& prefix, std::vector<nn::ParamRef<T>>& out) {
        enc1.collect(prefix + ".enc1", out);
        enc2.collect(prefix + ".enc2", out);
        enc3.collect(prefix + ".enc3", out);
        enc_head.collect(prefix + ".enc_head", out);
        dec1.collect(prefix + ".dec1", out);
        dec2.collect(prefix + ".dec2", out);
        dec3.collect(prefix + ".dec3", out);
        dec_head.collect(prefix + ".dec_head", out);
    }
};

}  // namespace backdrop::toy
