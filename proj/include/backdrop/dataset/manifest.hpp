// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace backdrop::dataset {

/// One generated (or skipped) variant. (source_id, variant_name, seed) is
/// unique within a manifest; skipped records carry a reason and no output.
struct VariantRecord {
    std::string source_id;
    std::string class_label;
    std::string variant_name;  // e.g. color_prompt_4, adversarial
    std::string prompt_text;
    uint64_t seed = 0;  // per-item seed derived from (global seed, source, variant)
    double lambda = 7.5;
    int num_steps = 20;
    double strength = 1.0;
    int dilation_radius = 6;
    std::string output_path;  // relative to the manifest directory; empty if skipped
    bool skipped = false;
    std::string skip_reason;

    // Attack-only fields.
    std::optional<int> attack_iterations;
    std::optional<double> attack_learning_rate;
    std::optional<int> attack_start_step;
    std::optional<double> attack_initial_loss;
    std::optional<double> attack_final_loss;
    std::optional<double> attack_best_loss;
    std::vector<double> attack_loss_trace;

    std::optional<double> mask_iou_after;  // IoU of re-segmented output vs source mask

    std::string key() const { return source_id + "\x1f" + variant_name + "\x1f" + std::to_string(seed); }
};

struct ManifestHeader {
    int schema_version = 1;
    std::vector<uint64_t> global_seeds;
};

/// JSON-lines manifest with a header record on the first line.
struct Manifest {
    ManifestHeader header;
    std::vector<VariantRecord> records;

    bool contains(const std::string& key) const;
    const VariantRecord* find(const std::string& key) const;
};

Manifest read_manifest(const std::filesystem::path& file);
void write_manifest(const std::filesystem::path& file, const Manifest& manifest);
void append_records(const std::filesystem::path& file, const std::vector<VariantRecord>& records);

/// Checks the file/record bijection and that every referenced image decodes
/// and re-encodes to identical bytes. Throws ValidationError on violations.
void verify_manifest(const std::filesystem::path& manifest_file, const std::filesystem::path& dataset_dir);

}  // namespace backdrop::dataset
