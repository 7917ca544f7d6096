// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#include "backdrop/eval/evaluate.hpp"

#include <atomic>
#include <map>
#include <mutex>
#include <thread>

#include "backdrop/core/image_io.hpp"

namespace backdrop::eval {

namespace {

std::vector<double> pooled_embedding(const toy::TextEncoder& enc, const std::string& text) {
    const Tensorf values = enc.encode(text).values;  // (1, Tk, D)
    const int Tk = values.dim(1), D = values.dim(2);
    std::vector<double> out(static_cast<size_t>(D), 0.0);
    for (int k = 0; k < Tk; ++k)
        for (int d = 0; d < D; ++d)
            out[static_cast<size_t>(d)] += static_cast<double>(values[static_cast<size_t>(k) * D + d]);
    for (auto& v : out) v /= static_cast<double>(Tk);
    return out;
}

}  // namespace

EvaluationOutputs evaluate_dataset(const toy::ToyStack& stack, const std::vector<toy::ShapesScene>& corpus,
                                   const dataset::Manifest& manifest, const std::filesystem::path& dataset_dir,
                                   int workers) {
    std::map<std::string, const toy::ShapesScene*> by_id;
    for (const auto& s : corpus) by_id[s.id] = &s;

    struct Task {
        const dataset::VariantRecord* record = nullptr;  // null => original
        const toy::ShapesScene* scene = nullptr;
    };
    std::vector<Task> tasks;
    for (const auto& s : corpus) tasks.push_back({nullptr, &s});
    for (const auto& r : manifest.records) {
        if (r.skipped) continue;
        auto it = by_id.find(r.source_id);
        if (it == by_id.end()) throw ValidationError("manifest references unknown source " + r.source_id);
        tasks.push_back({&r, it->second});
    }

    EvaluationOutputs out;
    out.predictions.resize(tasks.size());
    out.features.resize(tasks.size());
    out.caption_scores.resize(tasks.size());

    int n_workers = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
    if (n_workers < 1) n_workers = 1;
    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                const Task& task = tasks[i];
                const std::string variant = task.record ? task.record->variant_name : "original";
                const Image img = task.record ? read_png(dataset_dir / task.record->output_path)
                                              : task.scene->image;
                PredictionRecord rec = stack.classifier.classify(img);
                rec.source_id = task.scene->id;
                rec.variant_name = variant;
                rec.true_label = task.scene->class_index;
                out.predictions[i] = std::move(rec);
                out.features[i] = {task.scene->id, variant, stack.classifier.feature_vector(img)};
                const std::string prompt = task.record ? task.record->prompt_text : task.scene->caption;
                out.caption_scores[i] = {task.scene->id, variant,
                                         caption_similarity(pooled_embedding(stack.text_encoder, task.scene->caption),
                                                            pooled_embedding(stack.text_encoder, prompt))};
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

}  // namespace backdrop::eval
