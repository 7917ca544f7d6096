// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#include "backdrop/eval/report.hpp"

#include <fstream>
#include <map>

#include "backdrop/core/image_io.hpp"
#include "backdrop/eval/plot.hpp"

namespace backdrop::eval {

namespace fs = std::filesystem;

void write_feature_set(const fs::path& file, const std::vector<FeatureRecord>& records) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write feature set: " + file.string());
    for (const auto& r : records)
        out << nlohmann::json{{"source_id", r.source_id}, {"variant_name", r.variant_name}, {"features", r.features}}
                   .dump()
            << "\n";
}

std::vector<FeatureRecord> read_feature_set(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot read feature set: " + file.string());
    std::vector<FeatureRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        records.push_back({j.at("source_id").get<std::string>(), j.at("variant_name").get<std::string>(),
                           j.at("features").get<std::vector<double>>()});
    }
    return records;
}

void write_caption_scores(const fs::path& file, const std::vector<CaptionScoreRecord>& records) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write caption scores: " + file.string());
    for (const auto& r : records)
        out << nlohmann::json{{"source_id", r.source_id},
                              {"variant_name", r.variant_name},
                              {"similarity", r.similarity}}
                   .dump()
            << "\n";
}

std::vector<CaptionScoreRecord> read_caption_scores(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot read caption scores: " + file.string());
    std::vector<CaptionScoreRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        records.push_back({j.at("source_id").get<std::string>(), j.at("variant_name").get<std::string>(),
                           j.at("similarity").get<double>()});
    }
    return records;
}

namespace {

std::string family_of(const std::string& variant) {
    if (variant.rfind("color_prompt", 0) == 0) return "color";
    if (variant.rfind("texture_prompt", 0) == 0) return "texture";
    return "";
}

}  // namespace

nlohmann::json emit_report(const ReportInputs& inputs, const ReportConfig& config, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    nlohmann::json summary;

    // Accuracy per (model, variant) plus the drop table.
    const AccuracyTable table = accuracy_drop_table(inputs.predictions, config.baseline_variant);
    for (size_t vi = 0; vi < table.variants.size(); ++vi)
        for (size_t mi = 0; mi < table.models.size(); ++mi)
            summary["accuracy"][table.models[mi]][table.variants[vi]] = table.accuracy[vi][mi];
    summary["accuracy_average"] = nlohmann::json::object();
    for (size_t vi = 0; vi < table.variants.size(); ++vi) {
        summary["accuracy_average"][table.variants[vi]] = table.average[vi];
        summary["accuracy_delta"][table.variants[vi]] = table.delta_vs_baseline[vi];
    }
    for (const auto& w : table.warnings) summary["warnings"].push_back(w);
    {
        std::ofstream tf(out_dir / "accuracy_table.txt");
        tf << format_accuracy_table(table);
    }

    // Worst-performing prompt per color/texture family (reported as the
    // family accuracy).
    std::map<std::string, std::pair<std::string, double>> worst;
    for (size_t vi = 0; vi < table.variants.size(); ++vi) {
        const std::string fam = family_of(table.variants[vi]);
        if (fam.empty()) continue;
        auto it = worst.find(fam);
        if (it == worst.end() || table.average[vi] < it->second.second)
            worst[fam] = {table.variants[vi], table.average[vi]};
    }
    for (const auto& [fam, pick] : worst) {
        summary["family_worst_prompt"][fam] = pick.first;
        summary["family_accuracy"][fam] = pick.second;
    }

    // Calibration per (model, variant).
    for (const auto& [model, variants] : inputs.predictions) {
        for (const auto& [variant, records] : variants) {
            if (records.empty()) continue;
            const ReliabilityBins bins = make_reliability_bins(records, config.ece_bins);
            summary["ece"][model][variant] = ece(records, config.ece_bins);
            nlohmann::json jb = nlohmann::json::array();
            for (int b = 0; b < bins.num_bins; ++b) {
                jb.push_back({{"count", bins.count[static_cast<size_t>(b)]},
                              {"mean_confidence", bins.mean_confidence[static_cast<size_t>(b)]},
                              {"mean_accuracy", bins.mean_accuracy[static_cast<size_t>(b)]}});
            }
            summary["reliability"][model][variant] = jb;
            write_png(out_dir / ("reliability_" + model + "_" + variant + ".png"),
                      render_reliability_diagram(bins, model + " " + variant));
        }
    }

    // Mask IoU distribution per variant, from the manifest.
    std::map<std::string, std::vector<double>> iou_by_variant;
    for (const auto& r : inputs.manifest.records)
        if (!r.skipped && r.mask_iou_after) iou_by_variant[r.variant_name].push_back(*r.mask_iou_after);
    for (const auto& [variant, values] : iou_by_variant) {
        summary["iou_histogram"][variant] = iou_histogram(values);
        double mean = 0.0;
        for (double v : values) mean += v;
        summary["iou_mean"][variant] = mean / static_cast<double>(values.size());
    }

    // Feature-distribution distance per variant against the baseline.
    std::map<std::string, std::vector<std::vector<double>>> feats;
    for (const auto& r : inputs.features) feats[r.variant_name].push_back(r.features);
    if (feats.count(config.baseline_variant) && feats.at(config.baseline_variant).size() >= 2) {
        const GaussianSummary base = fit_gaussian(feats.at(config.baseline_variant));
        for (const auto& [variant, rows] : feats) {
            if (variant == config.baseline_variant || rows.size() < 2) continue;
            double clipped = 0.0;
            summary["frechet"][variant] = frechet_distance(base, fit_gaussian(rows), &clipped);
            if (clipped > 1e-6)
                summary["warnings"].push_back("frechet eigenvalue clipped by " + std::to_string(clipped) +
                                              " for variant " + variant);
        }
    }

    // Caption similarity means.
    std::map<std::string, std::pair<double, size_t>> caption_acc;
    for (const auto& r : inputs.caption_scores) {
        auto& [sum, cnt] = caption_acc[r.variant_name];
        sum += r.similarity;
        ++cnt;
    }
    for (const auto& [variant, sc] : caption_acc)
        summary["caption_similarity"][variant] = sc.first / static_cast<double>(sc.second);

    // Attack statistics from the manifest.
    size_t attacks = 0, improved = 0;
    double mean_initial = 0.0, mean_final = 0.0;
    for (const auto& r : inputs.manifest.records) {
        if (r.skipped || !r.attack_final_loss) continue;
        ++attacks;
        improved += *r.attack_final_loss >= *r.attack_initial_loss ? 1 : 0;
        mean_initial += *r.attack_initial_loss;
        mean_final += *r.attack_final_loss;
    }
    if (attacks > 0) {
        summary["attack"]["count"] = attacks;
        summary["attack"]["loss_increase_rate"] = static_cast<double>(improved) / static_cast<double>(attacks);
        summary["attack"]["mean_initial_loss"] = mean_initial / static_cast<double>(attacks);
        summary["attack"]["mean_final_loss"] = mean_final / static_cast<double>(attacks);
    }

    // Accuracy bar chart per model.
    for (size_t mi = 0; mi < table.models.size(); ++mi) {
        std::vector<std::string> labels;
        std::vector<double> values;
        for (size_t vi = 0; vi < table.variants.size(); ++vi) {
            labels.push_back(table.variants[vi]);
            values.push_back(table.accuracy[vi][mi]);
        }
        write_png(out_dir / ("accuracy_bars_" + table.models[mi] + ".png"),
                  render_bar_chart(labels, values, "TOP1 " + table.models[mi]));
    }

    std::ofstream sf(out_dir / "summary.json");
    if (!sf) throw IoError("cannot write summary in " + out_dir.string());
    sf << summary.dump(2) << "\n";
    return summary;
}

AccuracyTable accuracy_table_from_fixture(const nlohmann::json& fixture) {
    AccuracyTable table;
    table.baseline_variant = fixture.at("baseline").get<std::string>();
    table.models = fixture.at("models").get<std::vector<std::string>>();
    for (const auto& row : fixture.at("rows")) {
        table.variants.push_back(row.at("variant").get<std::string>());
        std::vector<double> acc;
        for (const auto& m : table.models) acc.push_back(row.at("accuracy").at(m).get<double>());
        table.accuracy.push_back(std::move(acc));
        table.average.push_back(row.at("average").get<double>());
    }
    table.delta_vs_baseline.assign(table.variants.size(), 0.0);
    double base = 0.0;
    for (size_t vi = 0; vi < table.variants.size(); ++vi)
        if (table.variants[vi] == table.baseline_variant) base = table.average[vi];
    for (size_t vi = 0; vi < table.variants.size(); ++vi)
        table.delta_vs_baseline[vi] = table.average[vi] - base;
    return table;
}

}  // namespace backdrop::eval
