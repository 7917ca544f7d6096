// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "backdrop/eval/metrics.hpp"

namespace backdrop::eval {

/// Reliability diagram: per-bin mean accuracy bars against the diagonal.
Image render_reliability_diagram(const ReliabilityBins& bins, const std::string& title);

/// Horizontal-axis bar chart of percentages (0..100) per label.
Image render_bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                       const std::string& title);

}  // namespace backdrop::eval
