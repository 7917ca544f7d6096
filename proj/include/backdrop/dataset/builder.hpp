// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "backdrop/attack/attack.hpp"
#include "backdrop/conditioning/prompts.hpp"
#include "backdrop/dataset/manifest.hpp"
#include "backdrop/toy/training.hpp"

namespace backdrop::dataset {

struct BuildConfig {
    float lambda = 7.5f;
    int num_steps = 20;
    float strength = 1.0f;
    int dilation_radius = 6;
    int workers = 0;  // 0 = hardware concurrency
};

/// Generates every (source, prompt variant, global seed) combination that is
/// not already present in the manifest. Per-item seeds derive from
/// stable_hash64(global_seed, source_id, variant_name), so any subset
/// regenerates byte-identically; records whose output file vanished are
/// re-rendered without appending. Unsupported sources (empty/full masks)
/// become skip records. Returns the up-to-date manifest.
Manifest generate_variant_set(const std::vector<toy::ShapesScene>& corpus, const cond::PromptSuite& suite,
                              const std::vector<uint64_t>& global_seeds, const toy::ToyStack& stack,
                              const BuildConfig& config, const std::filesystem::path& out_dir);

/// Adversarial counterpart: runs the background attack per source and appends
/// "adversarial" records with the attack fields and loss traces.
Manifest generate_adversarial_set(const std::vector<toy::ShapesScene>& corpus, const toy::ToyStack& stack,
                                  const std::vector<uint64_t>& global_seeds, const attack::AttackConfig& attack_config,
                                  const BuildConfig& config, const std::filesystem::path& out_dir);

}  // namespace backdrop::dataset
