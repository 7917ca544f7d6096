// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#include "backdrop/dataset/builder.hpp"

#include <atomic>
#include <mutex>
#include <thread>

#include "backdrop/core/image_io.hpp"
#include "backdrop/diffusion/composite.hpp"
#include "backdrop/eval/metrics.hpp"

namespace backdrop::dataset {

namespace fs = std::filesystem;

namespace {

std::string output_rel_path(const std::string& variant, const std::string& source_id, uint64_t seed) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(seed));
    return "images/" + variant + "/" + source_id + "__" + buf + ".png";
}

Manifest load_or_init(const fs::path& out_dir, const std::vector<uint64_t>& seeds) {
    const fs::path file = out_dir / "manifest.jsonl";
    if (fs::exists(file)) {
        Manifest m = read_manifest(file);
        for (uint64_t s : seeds)
            if (std::find(m.header.global_seeds.begin(), m.header.global_seeds.end(), s) ==
                m.header.global_seeds.end())
                m.header.global_seeds.push_back(s);
        write_manifest(file, m);  // keep the header's seed list current
        return m;
    }
    fs::create_directories(out_dir);
    Manifest m;
    m.header.global_seeds = seeds;
    write_manifest(file, m);
    return m;
}

int worker_count(int requested, size_t tasks) {
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    return static_cast<int>(std::min<size_t>(static_cast<size_t>(n), tasks ? tasks : 1));
}

template <class Fn>
void run_pool(size_t num_tasks, int workers, Fn&& fn) {
    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= num_tasks) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

double resegment_iou(const Image& output, const cond::ObjectMask& source_mask) {
    const cond::ThresholdMaskProvider segmenter;
    const cond::ObjectMask re = segmenter.segment(output, "", "");
    return eval::iou(re.values, source_mask.values);
}

}  // namespace

Manifest generate_variant_set(const std::vector<toy::ShapesScene>& corpus, const cond::PromptSuite& suite,
                              const std::vector<uint64_t>& global_seeds, const toy::ToyStack& stack,
                              const BuildConfig& config, const fs::path& out_dir) {
    const fs::path manifest_file = out_dir / "manifest.jsonl";
    Manifest manifest = load_or_init(out_dir, global_seeds);

    const diffusion::DdimGrid grid = diffusion::DdimGrid::even(stack.config.t_train, config.num_steps);
    diffusion::GuidanceConfig guide{config.lambda, config.strength};
    guide.validate();

    // Conditioning latents are per (scene, radius): compute once.
    std::vector<toy::SceneConditioning> conds(corpus.size());
    std::vector<cond::ObjectMask> dilated(corpus.size());
    std::vector<bool> usable(corpus.size(), true);
    std::vector<std::string> skip_reason(corpus.size());
    for (size_t i = 0; i < corpus.size(); ++i) {
        const auto& scene = corpus[i];
        const size_t object = scene.ground_truth_mask.object_pixels();
        if (object == 0 || object == scene.ground_truth_mask.values.size()) {
            usable[i] = false;
            skip_reason[i] = object == 0 ? "empty object mask" : "mask covers the whole image";
            continue;
        }
        conds[i] = toy::make_scene_conditioning(stack, scene.image, scene.ground_truth_mask,
                                                config.dilation_radius);
        dilated[i] = cond::dilate_mask(scene.ground_truth_mask, config.dilation_radius);
    }

    struct Task {
        size_t scene;
        const cond::PromptTemplate* tmpl;
        uint64_t global_seed;
        uint64_t item_seed;
        bool render_only = false;  // record exists, file vanished
    };
    std::vector<Task> tasks;
    for (size_t si = 0; si < corpus.size(); ++si) {
        for (const auto& tmpl : suite.templates) {
            for (uint64_t g : global_seeds) {
                const uint64_t item_seed = stable_hash64(g, corpus[si].id, tmpl.variant_name);
                VariantRecord probe;
                probe.source_id = corpus[si].id;
                probe.variant_name = tmpl.variant_name;
                probe.seed = item_seed;
                const VariantRecord* existing = manifest.find(probe.key());
                if (existing != nullptr) {
                    if (!existing->skipped && !fs::exists(out_dir / existing->output_path))
                        tasks.push_back({si, &tmpl, g, item_seed, true});
                    continue;
                }
                tasks.push_back({si, &tmpl, g, item_seed, false});
            }
        }
    }

    std::vector<VariantRecord> produced(tasks.size());
    std::vector<bool> is_new(tasks.size(), false);

    run_pool(tasks.size(), worker_count(config.workers, tasks.size()), [&](size_t ti) {
        const Task& task = tasks[ti];
        const auto& scene = corpus[task.scene];
        VariantRecord rec;
        rec.source_id = scene.id;
        rec.class_label = scene.class_label;
        rec.variant_name = task.tmpl->variant_name;
        rec.seed = task.item_seed;
        rec.lambda = config.lambda;
        rec.num_steps = config.num_steps;
        rec.strength = config.strength;
        rec.dilation_radius = config.dilation_radius;

        if (!usable[task.scene]) {
            rec.skipped = true;
            rec.skip_reason = skip_reason[task.scene];
            produced[ti] = std::move(rec);
            is_new[ti] = !task.render_only;
            return;
        }

        std::string substitution;
        switch (task.tmpl->category) {
            case cond::PromptCategory::class_label: substitution = scene.class_label; break;
            case cond::PromptCategory::caption: substitution = scene.caption; break;
            default: substitution = task.tmpl->substitution; break;
        }
        rec.prompt_text = cond::render_prompt(*task.tmpl, substitution);

        diffusion::InpaintConditioning<float> icond;
        icond.image_latent = conds[task.scene].image_latent;
        icond.mask_latent = conds[task.scene].mask_latent;
        icond.text_embedding = stack.text_encoder.encode(rec.prompt_text).values;
        icond.has_text = true;

        const auto res = diffusion::sample(stack.denoiser, icond, grid, guide, stack.schedule, task.item_seed);
        const Tensorf decoded = stack.autoencoder.decode_plain(res.final_latent);
        const Image generated = decoded.reshaped({3, toy::kSceneSize, toy::kSceneSize});
        const Image composited = diffusion::composite(scene.image, generated, dilated[task.scene]);

        rec.output_path = output_rel_path(rec.variant_name, rec.source_id, rec.seed);
        fs::create_directories((out_dir / rec.output_path).parent_path());
        write_png(out_dir / rec.output_path, composited);
        rec.mask_iou_after = resegment_iou(composited, scene.ground_truth_mask);

        produced[ti] = std::move(rec);
        is_new[ti] = !task.render_only;
    });

    std::vector<VariantRecord> fresh;
    for (size_t ti = 0; ti < tasks.size(); ++ti)
        if (is_new[ti]) fresh.push_back(produced[ti]);
    append_records(manifest_file, fresh);
    for (auto& r : fresh) manifest.records.push_back(std::move(r));
    return manifest;
}

Manifest generate_adversarial_set(const std::vector<toy::ShapesScene>& corpus, const toy::ToyStack& stack,
                                  const std::vector<uint64_t>& global_seeds,
                                  const attack::AttackConfig& attack_config, const BuildConfig& config,
                                  const fs::path& out_dir) {
    const fs::path manifest_file = out_dir / "manifest.jsonl";
    Manifest manifest = load_or_init(out_dir, global_seeds);

    const diffusion::DdimGrid grid = diffusion::DdimGrid::even(stack.config.t_train, config.num_steps);
    diffusion::GuidanceConfig guide{config.lambda, config.strength};
    guide.validate();

    const std::string variant = "adversarial";
    struct Task {
        size_t scene;
        uint64_t item_seed;
        bool render_only = false;
    };
    std::vector<Task> tasks;
    for (size_t si = 0; si < corpus.size(); ++si) {
        for (uint64_t g : global_seeds) {
            const uint64_t item_seed = stable_hash64(g, corpus[si].id, variant);
            VariantRecord probe;
            probe.source_id = corpus[si].id;
            probe.variant_name = variant;
            probe.seed = item_seed;
            const VariantRecord* existing = manifest.find(probe.key());
            if (existing != nullptr) {
                if (!existing->skipped && !fs::exists(out_dir / existing->output_path))
                    tasks.push_back({si, item_seed, true});
                continue;
            }
            tasks.push_back({si, item_seed, false});
        }
    }

    std::vector<VariantRecord> produced(tasks.size());
    std::vector<bool> is_new(tasks.size(), false);

    run_pool(tasks.size(), worker_count(config.workers, tasks.size()), [&](size_t ti) {
        const Task& task = tasks[ti];
        const auto& scene = corpus[task.scene];
        VariantRecord rec;
        rec.source_id = scene.id;
        rec.class_label = scene.class_label;
        rec.variant_name = variant;
        rec.seed = task.item_seed;
        rec.lambda = config.lambda;
        rec.num_steps = config.num_steps;
        rec.strength = config.strength;
        rec.dilation_radius = config.dilation_radius;
        rec.prompt_text = scene.caption;

        const size_t object = scene.ground_truth_mask.object_pixels();
        if (object == 0 || object == scene.ground_truth_mask.values.size()) {
            rec.skipped = true;
            rec.skip_reason = object == 0 ? "empty object mask" : "mask covers the whole image";
            produced[ti] = std::move(rec);
            is_new[ti] = !task.render_only;
            return;
        }

        cond::ConditioningBundle bundle;
        bundle.prompt_text = scene.caption;
        bundle.mask = scene.ground_truth_mask;
        bundle.source_image_id = scene.id;
        bundle.class_label = scene.class_label;

        attack::AttackConfig acfg = attack_config;
        acfg.dilation_radius = config.dilation_radius;
        const attack::AttackResult res =
            attack::adversarial_background(scene.image, scene.class_index, bundle, stack, stack.classifier,
                                           grid, guide, stack.schedule, acfg, task.item_seed);

        rec.output_path = output_rel_path(variant, rec.source_id, rec.seed);
        fs::create_directories((out_dir / rec.output_path).parent_path());
        write_png(out_dir / rec.output_path, res.adversarial_image);
        rec.mask_iou_after = resegment_iou(res.adversarial_image, scene.ground_truth_mask);
        rec.attack_iterations = acfg.iterations;
        rec.attack_learning_rate = acfg.learning_rate;
        rec.attack_start_step = acfg.start_step;
        rec.attack_initial_loss = res.initial_loss;
        rec.attack_final_loss = res.final_loss;
        rec.attack_best_loss = res.best_loss;
        rec.attack_loss_trace = res.loss_trace;

        produced[ti] = std::move(rec);
        is_new[ti] = !task.render_only;
    });

    std::vector<VariantRecord> fresh;
    for (size_t ti = 0; ti < tasks.size(); ++ti)
        if (is_new[ti]) fresh.push_back(produced[ti]);
    append_records(manifest_file, fresh);
    for (auto& r : fresh) manifest.records.push_back(std::move(r));
    return manifest;
}

}  // namespace backdrop::dataset
