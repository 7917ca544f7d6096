// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#include "backdrop/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace backdrop::eval {

double top1_accuracy(const std::vector<PredictionRecord>& records) {
    if (records.empty()) throw ValidationError("top1_accuracy of empty record set");
    size_t correct = 0;
    for (const auto& r : records) correct += r.predicted_label == r.true_label ? 1 : 0;
    return 100.0 * static_cast<double>(correct) / static_cast<double>(records.size());
}

int confidence_bin(double confidence, int num_bins) {
    if (num_bins < 1) throw ValidationError("num_bins must be >= 1");
    // Highest b with confidence >= b/M; 1.0 caps at the top bin.
    int b = static_cast<int>(confidence * num_bins);
    b = std::clamp(b, 0, num_bins - 1);
    while (b + 1 < num_bins && confidence >= static_cast<double>(b + 1) / num_bins) ++b;
    while (b > 0 && confidence < static_cast<double>(b) / num_bins) --b;
    return b;
}

ReliabilityBins make_reliability_bins(const std::vector<PredictionRecord>& records, int num_bins) {
    if (records.empty()) throw ValidationError("reliability bins of empty record set");
    if (num_bins < 1) throw ValidationError("num_bins must be >= 1");
    ReliabilityBins bins;
    bins.num_bins = num_bins;
    bins.count.assign(static_cast<size_t>(num_bins), 0);
    bins.mean_confidence.assign(static_cast<size_t>(num_bins), 0.0);
    bins.mean_accuracy.assign(static_cast<size_t>(num_bins), 0.0);
    for (const auto& r : records) {
        const double conf = r.confidence();
        const int b = confidence_bin(conf, num_bins);
        bins.count[static_cast<size_t>(b)] += 1;
        bins.mean_confidence[static_cast<size_t>(b)] += conf;
        bins.mean_accuracy[static_cast<size_t>(b)] += r.predicted_label == r.true_label ? 1.0 : 0.0;
    }
    for (int b = 0; b < num_bins; ++b) {
        const size_t n = bins.count[static_cast<size_t>(b)];
        if (n == 0) continue;
        bins.mean_confidence[static_cast<size_t>(b)] /= static_cast<double>(n);
        bins.mean_accuracy[static_cast<size_t>(b)] /= static_cast<double>(n);
    }
    return bins;
}

double ece(const std::vector<PredictionRecord>& records, int num_bins) {
    const ReliabilityBins bins = make_reliability_bins(records, num_bins);
    const double total = static_cast<double>(records.size());
    double err = 0.0;
    for (int b = 0; b < num_bins; ++b) {
        const size_t n = bins.count[static_cast<size_t>(b)];
        if (n == 0) continue;
        err += (static_cast<double>(n) / total) *
               std::fabs(bins.mean_confidence[static_cast<size_t>(b)] - bins.mean_accuracy[static_cast<size_t>(b)]);
    }
    return err;
}

double iou(const Tensor<uint8_t>& a, const Tensor<uint8_t>& b) {
    if (!a.same_shape(b)) throw ValidationError("iou: shape mismatch");
    size_t inter = 0, uni = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        const bool va = a[i] != 0, vb = b[i] != 0;
        inter += (va && vb) ? 1 : 0;
        uni += (va || vb) ? 1 : 0;
    }
    if (uni == 0) return 1.0;  // both empty, by convention
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<double> iou_histogram(const std::vector<double>& values) {
    if (values.empty()) throw ValidationError("iou_histogram of empty set");
    constexpr int kBins = 5;
    std::vector<double> pct(kBins, 0.0);
    for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("iou value outside [0,1]");
        pct[static_cast<size_t>(confidence_bin(v, kBins))] += 1.0;
    }
    for (auto& p : pct) p = 100.0 * p / static_cast<double>(values.size());
    return pct;
}

void GaussianSummary::validate() const {
    if (mean.size() != cov.rows() || cov.rows() != cov.cols())
        throw ValidationError("gaussian summary dimension mismatch");
    const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-9) throw ValidationError("covariance not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.eigenvalues().minCoeff() < -1e-9) throw ValidationError("covariance not PSD");
}

GaussianSummary fit_gaussian(const std::vector<std::vector<double>>& features) {
    if (features.size() < 2) throw ValidationError("need at least two feature vectors");
    const auto dim = static_cast<Eigen::Index>(features[0].size());
    GaussianSummary g;
    g.mean = Eigen::VectorXd::Zero(dim);
    for (const auto& f : features) {
        if (static_cast<Eigen::Index>(f.size()) != dim) throw ValidationError("feature dimension mismatch");
        g.mean += Eigen::Map<const Eigen::VectorXd>(f.data(), dim);
    }
    g.mean /= static_cast<double>(features.size());
    g.cov = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& f : features) {
        const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(f.data(), dim) - g.mean;
        g.cov += d * d.transpose();
    }
    g.cov /= static_cast<double>(features.size() - 1);
    g.cov = ((g.cov + g.cov.transpose()) / 2.0).eval();
    return g;
}

namespace {

/// Symmetric PSD square root; clips negative eigenvalues at zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, double* max_clipped) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    Eigen::VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev[i] < 0.0) {
            if (max_clipped) *max_clipped = std::max(*max_clipped, -ev[i]);
            ev[i] = 0.0;
        }
    }
    return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const GaussianSummary& a, const GaussianSummary& b, double* max_clipped) {
    if (a.mean.size() != b.mean.size()) throw ValidationError("frechet_distance: dimension mismatch");
    double clipped = 0.0;
    const Eigen::MatrixXd root_a = psd_sqrt(a.cov, &clipped);
    Eigen::MatrixXd inner = root_a * b.cov * root_a;
    inner = ((inner + inner.transpose()) / 2.0).eval();
    const Eigen::MatrixXd cross = psd_sqrt(inner, &clipped);
    const double mean_term = (a.mean - b.mean).squaredNorm();
    const double trace_term = a.cov.trace() + b.cov.trace() - 2.0 * cross.trace();
    if (max_clipped) *max_clipped = clipped;
    return mean_term + trace_term;
}

double caption_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) throw ValidationError("caption_similarity: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw ValidationError("caption_similarity: zero vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

AccuracyTable accuracy_drop_table(const PredictionSets& sets, const std::string& baseline_variant) {
    if (sets.empty()) throw ValidationError("no prediction sets given");
    AccuracyTable table;
    table.baseline_variant = baseline_variant;

    // Column and row order: models sorted; baseline variant first, then the
    // remaining variants in sorted order.
    std::set<std::string> variant_names;
    for (const auto& [model, variants] : sets) {
        table.models.push_back(model);
        for (const auto& [variant, records] : variants) variant_names.insert(variant);
    }
    if (!variant_names.count(baseline_variant)) throw ValidationError("baseline variant missing from sets");
    table.variants.push_back(baseline_variant);
    for (const auto& v : variant_names)
        if (v != baseline_variant) table.variants.push_back(v);

    // Intersection of source ids across every (model, variant) set.
    std::set<std::string> common;
    bool first = true;
    size_t max_set = 0;
    for (const auto& [model, variants] : sets) {
        for (const auto& [variant, records] : variants) {
            std::set<std::string> ids;
            for (const auto& r : records) ids.insert(r.source_id);
            max_set = std::max(max_set, ids.size());
            if (first) {
                common = std::move(ids);
                first = false;
            } else {
                std::set<std::string> keep;
                std::set_intersection(common.begin(), common.end(), ids.begin(), ids.end(),
                                      std::inserter(keep, keep.begin()));
                common = std::move(keep);
            }
        }
    }
    if (common.empty()) throw ValidationError("prediction sets share no source ids");
    if (common.size() < max_set)
        table.warnings.push_back("coverage differs across sets; accuracy restricted to " +
                                 std::to_string(common.size()) + " common sources");

    table.accuracy.assign(table.variants.size(), std::vector<double>(table.models.size(), 0.0));
    table.average.assign(table.variants.size(), 0.0);
    for (size_t vi = 0; vi < table.variants.size(); ++vi) {
        double avg = 0.0;
        for (size_t mi = 0; mi < table.models.size(); ++mi) {
            const auto& variants = sets.at(table.models[mi]);
            auto it = variants.find(table.variants[vi]);
            if (it == variants.end())
                throw ValidationError("model " + table.models[mi] + " missing variant " + table.variants[vi]);
            std::vector<PredictionRecord> filtered;
            for (const auto& r : it->second)
                if (common.count(r.source_id)) filtered.push_back(r);
            table.accuracy[vi][mi] = top1_accuracy(filtered);
            avg += table.accuracy[vi][mi];
        }
        table.average[vi] = avg / static_cast<double>(table.models.size());
    }
    table.delta_vs_baseline.assign(table.variants.size(), 0.0);
    for (size_t vi = 0; vi < table.variants.size(); ++vi)
        table.delta_vs_baseline[vi] = table.average[vi] - table.average[0];
    return table;
}

std::string format_accuracy_table(const AccuracyTable& table) {
    std::ostringstream out;
    out << std::fixed;
    out.precision(2);
    out << "variant";
    for (const auto& m : table.models) out << "\t" << m;
    out << "\taverage\tdelta\n";
    for (size_t vi = 0; vi < table.variants.size(); ++vi) {
        out << table.variants[vi];
        for (size_t mi = 0; mi < table.models.size(); ++mi) out << "\t" << table.accuracy[vi][mi];
        out << "\t" << table.average[vi];
        out << "\t" << table.delta_vs_baseline[vi] << "\n";
    }
    for (const auto& w : table.warnings) out << "# warning: " << w << "\n";
    return out.str();
}

}  // namespace backdrop::eval
