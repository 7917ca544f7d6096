// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "backdrop/core/tensor.hpp"
#include "backdrop/eval/prediction.hpp"

namespace backdrop::eval {

/// 100 * fraction of records with predicted_label == true_label.
double top1_accuracy(const std::vector<PredictionRecord>& records);

/// Equal-width confidence bins over [0,1]. A confidence on a bin boundary
/// belongs to the higher bin; 1.0 goes to the top bin. Bin membership is
/// decided by comparing against b/M computed in double, so the rule is
/// reproducible.
struct ReliabilityBins {
    int num_bins = 10;
    std::vector<size_t> count;
    std::vector<double> mean_confidence;
    std::vector<double> mean_accuracy;
};

int confidence_bin(double confidence, int num_bins);
ReliabilityBins make_reliability_bins(const std::vector<PredictionRecord>& records, int num_bins);

/// Count-weighted average gap between per-bin confidence and accuracy.
double ece(const std::vector<PredictionRecord>& records, int num_bins);

/// |A to B| / |A or B| over binary masks; two empty masks compare equal (1.0).
double iou(const Tensor<uint8_t>& a, const Tensor<uint8_t>& b);

/// Percentages of values falling into [0,.2,.4,.6,.8,1] ranges; a value on an
/// edge belongs to the higher range, 1.0 to the top. Sums to 100.
std::vector<double> iou_histogram(const std::vector<double>& values);

/// Mean and covariance of a feature distribution (unbiased covariance).
struct GaussianSummary {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    void validate() const;  // symmetry to 1e-9, eigenvalues >= -1e-9
};

GaussianSummary fit_gaussian(const std::vector<std::vector<double>>& features);

/// ||mu_a - mu_b||^2 + tr(Sa + Sb - 2 (Sa^1/2 Sb Sa^1/2)^1/2), square roots by
/// symmetric eigendecomposition with negative eigenvalues clipped at zero.
/// max_clipped, when given, receives the largest clipped magnitude.
double frechet_distance(const GaussianSummary& a, const GaussianSummary& b, double* max_clipped = nullptr);

/// Cosine similarity; rejects zero vectors.
double caption_similarity(const std::vector<double>& a, const std::vector<double>& b);

/// Per-model, per-variant accuracy table with an average column and deltas
/// against the baseline variant. Source ids are intersected across all sets;
/// partial coverage is recorded as a warning rather than an error.
struct AccuracyTable {
    std::vector<std::string> models;    // column order
    std::vector<std::string> variants;  // row order, baseline first
    std::string baseline_variant;
    std::vector<std::vector<double>> accuracy;  // [variant][model]
    std::vector<double> average;                // per variant
    std::vector<double> delta_vs_baseline;      // average minus baseline average
    std::vector<std::string> warnings;
};

using PredictionSets = std::map<std::string, std::map<std::string, std::vector<PredictionRecord>>>;

AccuracyTable accuracy_drop_table(const PredictionSets& sets_by_model_then_variant,
                                  const std::string& baseline_variant);

std::string format_accuracy_table(const AccuracyTable& table);

}  // namespace backdrop::eval
