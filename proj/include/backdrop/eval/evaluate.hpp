// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "backdrop/dataset/manifest.hpp"
#include "backdrop/eval/report.hpp"
#include "backdrop/toy/training.hpp"

namespace backdrop::eval {

struct EvaluationOutputs {
    std::vector<PredictionRecord> predictions;      // originals plus every generated variant
    std::vector<FeatureRecord> features;            // classifier penultimate features
    std::vector<CaptionScoreRecord> caption_scores; // prompt drift vs the clean caption
};

/// Classifies every generated image in the manifest plus the source images
/// themselves (variant "original"). Images are read from disk so evaluation
/// sees exactly what was shipped.
EvaluationOutputs evaluate_dataset(const toy::ToyStack& stack, const std::vector<toy::ShapesScene>& corpus,
                                   const dataset::Manifest& manifest, const std::filesystem::path& dataset_dir,
                                   int workers = 0);

}  // namespace backdrop::eval
