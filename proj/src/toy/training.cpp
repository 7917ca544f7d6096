// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#include "backdrop/toy/training.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>

#include "backdrop/nn/adamw.hpp"
#include "backdrop/nn/serialize.hpp"

namespace backdrop::toy {

namespace fs = std::filesystem;

namespace {

Tensorf stack_images(const std::vector<ShapesScene>& scenes, const std::vector<int>& idx, size_t lo, size_t hi) {
    const int n = static_cast<int>(hi - lo);
    Tensorf out({n, 3, kSceneSize, kSceneSize});
    const size_t per = static_cast<size_t>(3) * kSceneSize * kSceneSize;
    for (size_t i = lo; i < hi; ++i) {
        const Image& img = scenes[static_cast<size_t>(idx[i])].image;
        std::copy_n(img.data(), per, out.data() + (i - lo) * per);
    }
    return out;
}

void seeded_shuffle(std::vector<int>& idx, Rng& rng) {
    for (size_t i = idx.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(rng.uniform() * static_cast<double>(i));
        std::swap(idx[i - 1], idx[j < i ? j : i - 1]);
    }
}

void adamw_step(nn::AdamW<float>& opt, nn::Binder<float>& bind, std::vector<nn::ParamRef<float>>& params) {
    opt.begin_step();
    for (auto& p : params) {
        if (!bind.bound(*p.tensor)) continue;
        opt.update(*p.tensor, bind.grad_of(*p.tensor));
    }
}

}  // namespace

void ToyStack::refresh_null_text() { denoiser.null_text = text_encoder.encode("").values; }

SceneConditioning make_scene_conditioning(const ToyStack& stack, const Image& image,
                                          const cond::ObjectMask& object_mask, int dilation_radius) {
    SceneConditioning sc;
    sc.image_latent = stack.autoencoder.encode_plain(image.reshaped({1, 3, image.dim(1), image.dim(2)}));
    const cond::ObjectMask dilated = cond::dilate_mask(object_mask, dilation_radius);
    Tensorf keep = cond::downsample_mask(dilated, image.dim(1) / sc.image_latent.dim(2));
    // 1 - keep: mark the background (regenerate) region.
    sc.mask_latent = Tensorf(keep.shape());
    for (size_t i = 0; i < keep.size(); ++i) sc.mask_latent[i] = 1.0f - keep[i];
    return sc;
}

void train_autoencoder(TinyAutoencoder<float>& ae, const std::vector<ShapesScene>& scenes, int epochs,
                       int batch, double lr, uint64_t seed) {
    std::vector<nn::ParamRef<float>> params;
    ae.collect("ae", params);
    nn::AdamW<float> opt({lr, 0.9, 0.999, 1e-8, 0.0});
    std::vector<int> idx(scenes.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng order_rng(stable_hash64(seed, "ae_order"));

    for (int epoch = 0; epoch < epochs; ++epoch) {
        opt.set_lr(epoch * 3 >= epochs * 2 ? lr * 0.2 : lr);
        seeded_shuffle(idx, order_rng);
        for (size_t lo = 0; lo < idx.size(); lo += static_cast<size_t>(batch)) {
            const size_t hi = std::min(idx.size(), lo + static_cast<size_t>(batch));
            nn::Tape<float> tape;
            nn::Binder<float> bind(tape, true);
            nn::Var<float> imgs = tape.constant(stack_images(scenes, idx, lo, hi));
            nn::Var<float> recon = ae.decode(bind, ae.encode(bind, imgs));
            nn::Var<float> loss = nn::mse_loss(recon, imgs);
            const float lv = tape.value(loss)[0];
            if (!std::isfinite(lv)) throw TrainingError("autoencoder loss diverged");
            tape.backward(loss);
            adamw_step(opt, bind, params);
        }
    }
}

double autoencoder_test_mse(const TinyAutoencoder<float>& ae, const std::vector<ShapesScene>& scenes) {
    double total = 0.0;
    for (const auto& scene : scenes) {
        const Tensorf img = scene.image.reshaped({1, 3, kSceneSize, kSceneSize});
        const Tensorf recon = ae.decode_plain(ae.encode_plain(img));
        double acc = 0.0;
        for (size_t i = 0; i < img.size(); ++i) {
            const double d = static_cast<double>(recon[i]) - static_cast<double>(img[i]);
            acc += d * d;
        }
        total += acc / static_cast<double>(img.size());
    }
    return total / static_cast<double>(scenes.size());
}

namespace {

void flip_horizontal(float* chw, int C, int H, int W) {
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y) {
            float* row = chw + (static_cast<size_t>(c) * H + y) * W;
            for (int x = 0; x < W / 2; ++x) std::swap(row[x], row[W - 1 - x]);
        }
}

}  // namespace

void train_classifier(TinyClassifier<float>& clf, const std::vector<ShapesScene>& scenes, int epochs,
                      int batch, double lr, uint64_t seed) {
    std::vector<nn::ParamRef<float>> params;
    clf.collect("clf", params);
    nn::AdamW<float> opt({lr, 0.9, 0.999, 1e-8, 1e-4});
    std::vector<int> idx(scenes.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng order_rng(stable_hash64(seed, "clf_order"));
    Rng aug_rng(stable_hash64(seed, "clf_aug"));

    for (int epoch = 0; epoch < epochs; ++epoch) {
        // Cool the step size for the final third of training.
        opt.set_lr(epoch * 3 >= epochs * 2 ? lr * 0.2 : lr);
        seeded_shuffle(idx, order_rng);
        for (size_t lo = 0; lo < idx.size(); lo += static_cast<size_t>(batch)) {
            const size_t hi = std::min(idx.size(), lo + static_cast<size_t>(batch));
            const int n = static_cast<int>(hi - lo);
            std::vector<int> labels;
            for (size_t i = lo; i < hi; ++i) labels.push_back(scenes[static_cast<size_t>(idx[i])].class_index);
            Tensorf imgs = stack_images(scenes, idx, lo, hi);
            // Every shape class is symmetric about the vertical axis, so
            // horizontal flips are label-preserving augmentation.
            for (int b = 0; b < n; ++b)
                if (aug_rng.uniform() < 0.5)
                    flip_horizontal(imgs.data() + static_cast<size_t>(b) * 3 * kSceneSize * kSceneSize, 3,
                                    kSceneSize, kSceneSize);
            nn::Tape<float> tape;
            nn::Binder<float> bind(tape, true);
            nn::Var<float> loss =
                nn::softmax_cross_entropy(clf.logits(bind, tape.constant(std::move(imgs))), labels);
            const float lv = tape.value(loss)[0];
            if (!std::isfinite(lv)) throw TrainingError("classifier loss diverged");
            tape.backward(loss);
            adamw_step(opt, bind, params);
        }
    }
}

double classifier_accuracy(const TinyClassifier<float>& clf, const std::vector<ShapesScene>& scenes) {
    size_t correct = 0;
    for (const auto& scene : scenes) {
        const auto rec = clf.classify(scene.image);
        if (rec.predicted_label == scene.class_index) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(scenes.size());
}

void train_denoiser(ToyStack& stack, const std::vector<ShapesScene>& scenes, double* final_loss) {
    const TrainConfig& cfg = stack.config;
    const int Cz = stack.config.latent_channels;
    const int L = kSceneSize / 4;

    // Frozen-autoencoder latents and masks, computed once.
    std::vector<SceneConditioning> conds;
    conds.reserve(scenes.size());
    for (const auto& scene : scenes)
        conds.push_back(make_scene_conditioning(stack, scene.image, scene.ground_truth_mask,
                                                cfg.train_dilation_radius));
    std::vector<std::vector<int>> caption_ids;
    caption_ids.reserve(scenes.size());
    for (const auto& scene : scenes) caption_ids.push_back(stack.text_encoder.tokenize(scene.caption));
    const std::vector<int> null_ids = stack.text_encoder.tokenize("");

    std::vector<nn::ParamRef<float>> params;
    stack.denoiser.collect("den", params);
    stack.text_encoder.collect("txt", params);
    nn::AdamW<float> opt({cfg.den_lr, 0.9, 0.999, 1e-8, 0.0});

    std::vector<int> idx(scenes.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng order_rng(stable_hash64(cfg.seed, "den_order"));
    Rng noise_rng(stable_hash64(cfg.seed, "den_noise"));

    double last = 0.0;
    for (int epoch = 0; epoch < cfg.den_epochs; ++epoch) {
        opt.set_lr(epoch * 3 >= cfg.den_epochs * 2 ? cfg.den_lr * 0.2 : cfg.den_lr);
        seeded_shuffle(idx, order_rng);
        for (size_t lo = 0; lo < idx.size(); lo += static_cast<size_t>(cfg.batch)) {
            const size_t hi = std::min(idx.size(), lo + static_cast<size_t>(cfg.batch));
            const int n = static_cast<int>(hi - lo);

            Tensorf z({n, Cz, L, L}), eps({n, Cz, L, L});
            Tensorf ilat({n, Cz, L, L}), mlat({n, 1, L, L});
            std::vector<int> timesteps(static_cast<size_t>(n));
            std::vector<std::vector<int>> ids(static_cast<size_t>(n));
            const size_t per = static_cast<size_t>(Cz) * L * L;
            const size_t mper = static_cast<size_t>(L) * L;
            for (int b = 0; b < n; ++b) {
                const auto& sc = conds[static_cast<size_t>(idx[lo + static_cast<size_t>(b)])];
                const int t = noise_rng.uniform_int(1, cfg.t_train);
                timesteps[static_cast<size_t>(b)] = t;
                const double abar = stack.schedule.alpha_bar(t);
                const float a = static_cast<float>(std::sqrt(abar));
                const float s = static_cast<float>(std::sqrt(1.0 - abar));
                for (size_t i = 0; i < per; ++i) {
                    const float e = static_cast<float>(noise_rng.normal());
                    eps[static_cast<size_t>(b) * per + i] = e;
                    z[static_cast<size_t>(b) * per + i] = a * sc.image_latent[i] + s * e;
                }
                std::copy_n(sc.image_latent.data(), per, ilat.data() + static_cast<size_t>(b) * per);
                std::copy_n(sc.mask_latent.data(), mper, mlat.data() + static_cast<size_t>(b) * mper);
                const bool drop = noise_rng.uniform() < cfg.text_drop_prob;
                ids[static_cast<size_t>(b)] =
                    drop ? null_ids : caption_ids[static_cast<size_t>(idx[lo + static_cast<size_t>(b)])];
            }

            nn::Tape<float> tape;
            nn::Binder<float> bind(tape, true);
            nn::Var<float> text_seq = stack.text_encoder.embed_batch(bind, ids);
            nn::Var<float> eps_hat =
                stack.denoiser.forward(bind, tape.constant(z), timesteps, text_seq, tape.constant(ilat),
                                       tape.constant(mlat));
            nn::Var<float> loss = nn::mse_loss(eps_hat, tape.constant(eps));
            last = static_cast<double>(tape.value(loss)[0]);
            if (!std::isfinite(last)) throw TrainingError("denoiser loss diverged");
            tape.backward(loss);
            adamw_step(opt, bind, params);
        }
    }
    if (final_loss) *final_loss = last;
    stack.refresh_null_text();
}

void denoiser_validation_loss(const ToyStack& stack, const std::vector<ShapesScene>& scenes,
                              double* cond_loss, double* uncond_loss) {
    const TrainConfig& cfg = stack.config;
    const int Cz = cfg.latent_channels;
    const int L = kSceneSize / 4;
    Rng noise_rng(stable_hash64(cfg.seed, "den_val"));
    double cond_total = 0.0, uncond_total = 0.0;
    size_t count = 0;
    for (const auto& scene : scenes) {
        const auto sc = make_scene_conditioning(stack, scene.image, scene.ground_truth_mask,
                                                cfg.train_dilation_radius);
        // Deterministic spread of validation timesteps.
        const int t = 1 + static_cast<int>((count * 97) % static_cast<size_t>(cfg.t_train));
        const double abar = stack.schedule.alpha_bar(t);
        const float a = static_cast<float>(std::sqrt(abar));
        const float s = static_cast<float>(std::sqrt(1.0 - abar));
        Tensorf eps({1, Cz, L, L}), z({1, Cz, L, L});
        for (size_t i = 0; i < eps.size(); ++i) {
            eps[i] = static_cast<float>(noise_rng.normal());
            z[i] = a * sc.image_latent[i] + s * eps[i];
        }
        for (int pass = 0; pass < 2; ++pass) {
            nn::Tape<float> tape;
            nn::Binder<float> bind(tape, false);
            nn::Var<float> zv = tape.constant(z);
            nn::Var<float> iv = tape.constant(sc.image_latent);
            nn::Var<float> mv = tape.constant(sc.mask_latent);
            nn::Var<float> eps_hat;
            if (pass == 0) {
                nn::Var<float> text = tape.constant(stack.text_encoder.encode(scene.caption).values);
                eps_hat = stack.denoiser.predict(bind, zv, t, &text, iv, mv);
            } else {
                eps_hat = stack.denoiser.predict(bind, zv, t, nullptr, iv, mv);
            }
            double acc = 0.0;
            const Tensorf& vh = tape.value(eps_hat);
            for (size_t i = 0; i < vh.size(); ++i) {
                const double d = static_cast<double>(vh[i]) - static_cast<double>(eps[i]);
                acc += d * d;
            }
            (pass == 0 ? cond_total : uncond_total) += acc / static_cast<double>(vh.size());
        }
        ++count;
    }
    if (cond_loss) *cond_loss = cond_total / static_cast<double>(count);
    if (uncond_loss) *uncond_loss = uncond_total / static_cast<double>(count);
}

ToyStack train_toy_stack(const TrainConfig& config, TrainReport* report) {
    const auto t0 = std::chrono::steady_clock::now();

    ToyStack stack;
    stack.config = config;
    stack.schedule = diffusion::make_linear_schedule(config.t_train, config.beta_min, config.beta_max);

    const auto train = generate_shapes_dataset(config.train_scenes, config.seed, "train");
    const auto test = generate_shapes_dataset(config.test_scenes, config.seed, "test");

    // Vocabulary from training captions plus the shipped prompt wording.
    std::vector<std::string> texts;
    for (const auto& s : train) texts.push_back(s.caption);
    texts.emplace_back("this is a picture of a vivid red green blue colorful background");
    texts.emplace_back("this is a picture of textures intricately textured in the background");
    texts.emplace_back("this is a photo of distorted colorful textures in the background");
    for (const char* cls : kShapeClasses) texts.emplace_back(cls);
    stack.text_encoder = TextEncoder(texts, config.tokens, config.text_dim, config.seed);

    stack.autoencoder = TinyAutoencoder<float>(config.ae_base, config.latent_channels, config.seed);
    stack.denoiser = TinyDenoiser<float>(config.den_base, config.latent_channels, config.temb_dim,
                                         config.text_dim, config.seed);
    stack.classifier = TinyClassifier<float>(config.clf_base, kNumClasses, config.seed);

    TrainReport rep;
    train_autoencoder(stack.autoencoder, train, config.ae_epochs, config.batch, config.ae_lr, config.seed);
    rep.ae_test_mse = autoencoder_test_mse(stack.autoencoder, test);

    train_denoiser(stack, train, &rep.den_final_train_loss);
    denoiser_validation_loss(stack, test, &rep.den_val_loss_cond, &rep.den_val_loss_uncond);

    const auto clf_train = config.clf_train_scenes <= config.train_scenes
                               ? train
                               : generate_shapes_dataset(config.clf_train_scenes, config.seed, "train");
    train_classifier(stack.classifier, clf_train, config.clf_epochs, config.batch, config.clf_lr, config.seed);
    rep.clf_test_accuracy = classifier_accuracy(stack.classifier, test);

    stack.refresh_null_text();
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (report) *report = rep;
    return stack;
}

namespace {

nlohmann::json config_to_json(const TrainConfig& c) {
    return {{"train_scenes", c.train_scenes},
            {"clf_train_scenes", c.clf_train_scenes},
            {"test_scenes", c.test_scenes},
            {"seed", c.seed},
            {"t_train", c.t_train},
            {"beta_min", c.beta_min},
            {"beta_max", c.beta_max},
            {"latent_channels", c.latent_channels},
            {"ae_base", c.ae_base},
            {"den_base", c.den_base},
            {"clf_base", c.clf_base},
            {"tokens", c.tokens},
            {"text_dim", c.text_dim},
            {"temb_dim", c.temb_dim},
            {"batch", c.batch},
            {"ae_epochs", c.ae_epochs},
            {"den_epochs", c.den_epochs},
            {"clf_epochs", c.clf_epochs},
            {"ae_lr", c.ae_lr},
            {"den_lr", c.den_lr},
            {"clf_lr", c.clf_lr},
            {"text_drop_prob", c.text_drop_prob},
            {"train_dilation_radius", c.train_dilation_radius}};
}

TrainConfig config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.train_scenes = j.at("train_scenes").get<int>();
    c.clf_train_scenes = j.value("clf_train_scenes", c.train_scenes);
    c.test_scenes = j.at("test_scenes").get<int>();
    c.seed = j.at("seed").get<uint64_t>();
    c.t_train = j.at("t_train").get<int>();
    c.beta_min = j.at("beta_min").get<double>();
    c.beta_max = j.at("beta_max").get<double>();
    c.latent_channels = j.at("latent_channels").get<int>();
    c.ae_base = j.at("ae_base").get<int>();
    c.den_base = j.at("den_base").get<int>();
    c.clf_base = j.at("clf_base").get<int>();
    c.tokens = j.at("tokens").get<int>();
    c.text_dim = j.at("text_dim").get<int>();
    c.temb_dim = j.at("temb_dim").get<int>();
    c.batch = j.at("batch").get<int>();
    c.ae_epochs = j.at("ae_epochs").get<int>();
    c.den_epochs = j.at("den_epochs").get<int>();
    c.clf_epochs = j.at("clf_epochs").get<int>();
    c.ae_lr = j.at("ae_lr").get<double>();
    c.den_lr = j.at("den_lr").get<double>();
    c.clf_lr = j.at("clf_lr").get<double>();
    c.text_drop_prob = j.at("text_drop_prob").get<float>();
    c.train_dilation_radius = j.at("train_dilation_radius").get<int>();
    return c;
}

}  // namespace

void save_stack(const ToyStack& stack, const fs::path& dir, const TrainReport* report) {
    fs::create_directories(dir);
    const nlohmann::json cfg = config_to_json(stack.config);

    ToyStack& mutable_stack = const_cast<ToyStack&>(stack);
    {
        std::vector<nn::ParamRef<float>> params;
        mutable_stack.autoencoder.collect("ae", params);
        nn::save_weights(dir / "autoencoder.bkw", params, {{"config", cfg}});
    }
    {
        std::vector<nn::ParamRef<float>> params;
        mutable_stack.denoiser.collect("den", params);
        nn::save_weights(dir / "denoiser.bkw", params, {{"config", cfg}});
    }
    {
        std::vector<nn::ParamRef<float>> params;
        mutable_stack.text_encoder.collect("txt", params);
        nn::save_weights(dir / "text_encoder.bkw", params,
                         {{"config", cfg}, {"vocab", stack.text_encoder.vocab()}});
    }
    {
        std::vector<nn::ParamRef<float>> params;
        mutable_stack.classifier.collect("clf", params);
        nn::save_weights(dir / "classifier.bkw", params, {{"config", cfg}});
    }
    nlohmann::json prov{{"config", cfg}};
    if (report) {
        prov["metrics"] = {{"ae_test_mse", report->ae_test_mse},
                           {"clf_test_accuracy", report->clf_test_accuracy},
                           {"den_final_train_loss", report->den_final_train_loss},
                           {"den_val_loss_cond", report->den_val_loss_cond},
                           {"den_val_loss_uncond", report->den_val_loss_uncond},
                           {"wall_seconds", report->wall_seconds}};
    }
    std::ofstream out(dir / "provenance.json");
    out << prov.dump(2) << "\n";
}

ToyStack load_stack(const fs::path& dir) {
    std::ifstream in(dir / "provenance.json");
    if (!in) throw IoError("missing provenance.json in " + dir.string());
    nlohmann::json prov = nlohmann::json::parse(in);
    const TrainConfig cfg = config_from_json(prov.at("config"));

    ToyStack stack;
    stack.config = cfg;
    stack.schedule = diffusion::make_linear_schedule(cfg.t_train, cfg.beta_min, cfg.beta_max);
    stack.autoencoder = TinyAutoencoder<float>(cfg.ae_base, cfg.latent_channels, cfg.seed);
    stack.denoiser = TinyDenoiser<float>(cfg.den_base, cfg.latent_channels, cfg.temb_dim, cfg.text_dim, cfg.seed);
    stack.classifier = TinyClassifier<float>(cfg.clf_base, kNumClasses, cfg.seed);

    {
        std::vector<nn::ParamRef<float>> params;
        stack.autoencoder.collect("ae", params);
        nn::load_weights(dir / "autoencoder.bkw", params);
    }
    {
        std::vector<nn::ParamRef<float>> params;
        stack.denoiser.collect("den", params);
        nn::load_weights(dir / "denoiser.bkw", params);
    }
    {
        // Vocab first so the embedding table has its final shape.
        std::vector<nn::ParamRef<float>> probe;
        stack.text_encoder = TextEncoder({}, cfg.tokens, cfg.text_dim, cfg.seed);
        std::ifstream raw(dir / "text_encoder.bkw", std::ios::binary);
        if (!raw) throw IoError("missing text_encoder.bkw in " + dir.string());
        raw.ignore(6);
        uint64_t hlen = 0;
        raw.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
        std::string hs(hlen, '\0');
        raw.read(hs.data(), static_cast<std::streamsize>(hlen));
        nlohmann::json header = nlohmann::json::parse(hs);
        stack.text_encoder.set_vocab(header.at("meta").at("vocab").get<std::vector<std::string>>());
        std::vector<nn::ParamRef<float>> params;
        stack.text_encoder.collect("txt", params);
        nn::load_weights(dir / "text_encoder.bkw", params);
    }
    {
        std::vector<nn::ParamRef<float>> params;
        stack.classifier.collect("clf", params);
        nn::load_weights(dir / "classifier.bkw", params);
    }
    stack.refresh_null_text();
    return stack;
}

}  // namespace backdrop::toy
