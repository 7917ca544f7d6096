// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "backdrop/core/errors.hpp"

namespace backdrop::eval {

/// Argmax with ties broken by lowest index, so accuracy is deterministic.
inline int argmax_lowest_tie(const std::vector<double>& v) {
    if (v.empty()) throw ValidationError("argmax of empty vector");
    size_t best = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return static_cast<int>(best);
}

/// Per-image classifier output consumed by every metric.
struct PredictionRecord {
    std::string source_id;
    std::string variant_name;
    int true_label = -1;
    int predicted_label = -1;
    std::vector<double> confidence_vector;

    /// Confidence of the predicted class (the max entry).
    double confidence() const;

    /// Enforces the type invariants: entries in [0,1], sum 1 +/- 1e-6,
    /// predicted_label equal to the tie-broken argmax.
    void validate() const;
};

/// JSON-lines I/O, one record per line.
void write_prediction_set(const std::filesystem::path& file, const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> read_prediction_set(const std::filesystem::path& file);

}  // namespace backdrop::eval
