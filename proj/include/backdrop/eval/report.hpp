// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include "backdrop/dataset/manifest.hpp"
#include "backdrop/eval/metrics.hpp"

namespace backdrop::eval {

struct ReportConfig {
    int ece_bins = 10;
    std::string baseline_variant = "original";
};

struct FeatureRecord {
    std::string source_id;
    std::string variant_name;
    std::vector<double> features;
};

struct CaptionScoreRecord {
    std::string source_id;
    std::string variant_name;
    double similarity = 0.0;
};

void write_feature_set(const std::filesystem::path& file, const std::vector<FeatureRecord>& records);
std::vector<FeatureRecord> read_feature_set(const std::filesystem::path& file);
void write_caption_scores(const std::filesystem::path& file, const std::vector<CaptionScoreRecord>& records);
std::vector<CaptionScoreRecord> read_caption_scores(const std::filesystem::path& file);

struct ReportInputs {
    dataset::Manifest manifest;
    PredictionSets predictions;  // model -> variant -> records
    std::vector<FeatureRecord> features;
    std::vector<CaptionScoreRecord> caption_scores;
};

/// Renders the report bundle into out_dir: summary.json with every computed
/// metric, a formatted accuracy table, reliability diagrams and an accuracy
/// bar chart. Deterministic for identical inputs. Returns the summary.
nlohmann::json emit_report(const ReportInputs& inputs, const ReportConfig& config,
                           const std::filesystem::path& out_dir);

/// Renders a stored per-model accuracy summary (reference tables shipped as
/// fixtures). Averages come from the fixture verbatim rather than being
/// recomputed, so published tables reproduce exactly as stored.
AccuracyTable accuracy_table_from_fixture(const nlohmann::json& fixture);

}  // namespace backdrop::eval
