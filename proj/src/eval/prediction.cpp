// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#include "backdrop/eval/prediction.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace backdrop::eval {

double PredictionRecord::confidence() const {
    if (confidence_vector.empty()) throw ValidationError("empty confidence vector");
    double mx = confidence_vector[0];
    for (double v : confidence_vector) mx = std::max(mx, v);
    return mx;
}

void PredictionRecord::validate() const {
    if (confidence_vector.empty()) throw ValidationError("empty confidence vector");
    double sum = 0.0;
    for (double v : confidence_vector) {
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("confidence entry outside [0,1]");
        sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-6) throw ValidationError("confidence vector does not sum to 1");
    if (predicted_label != argmax_lowest_tie(confidence_vector))
        throw ValidationError("predicted_label is not the argmax of the confidence vector");
}

void write_prediction_set(const std::filesystem::path& file, const std::vector<PredictionRecord>& records) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write prediction set: " + file.string());
    for (const auto& r : records) {
        nlohmann::json j{{"source_id", r.source_id},
                         {"variant_name", r.variant_name},
                         {"true_label", r.true_label},
                         {"predicted_label", r.predicted_label},
                         {"confidence_vector", r.confidence_vector}};
        out << j.dump() << "\n";
    }
}

std::vector<PredictionRecord> read_prediction_set(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot read prediction set: " + file.string());
    std::vector<PredictionRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        PredictionRecord r;
        r.source_id = j.at("source_id").get<std::string>();
        r.variant_name = j.at("variant_name").get<std::string>();
        r.true_label = j.at("true_label").get<int>();
        r.predicted_label = j.at("predicted_label").get<int>();
        r.confidence_vector = j.at("confidence_vector").get<std::vector<double>>();
        r.validate();
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace backdrop::eval
