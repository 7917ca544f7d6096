// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#include "backdrop/dataset/manifest.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "backdrop/core/errors.hpp"
#include "backdrop/core/image_io.hpp"

namespace backdrop::dataset {

namespace fs = std::filesystem;

namespace {

nlohmann::json record_to_json(const VariantRecord& r) {
    nlohmann::json j{{"type", "record"},
                     {"source_id", r.source_id},
                     {"class_label", r.class_label},
                     {"variant_name", r.variant_name},
                     {"prompt_text", r.prompt_text},
                     {"seed", r.seed},
                     {"lambda", r.lambda},
                     {"num_steps", r.num_steps},
                     {"strength", r.strength},
                     {"dilation_radius", r.dilation_radius},
                     {"output_path", r.output_path},
                     {"skipped", r.skipped}};
    if (r.skipped) j["skip_reason"] = r.skip_reason;
    if (r.attack_iterations) {
        j["attack"] = {{"iterations", *r.attack_iterations},
                       {"learning_rate", *r.attack_learning_rate},
                       {"start_step", *r.attack_start_step},
                       {"initial_loss", *r.attack_initial_loss},
                       {"final_loss", *r.attack_final_loss},
                       {"best_loss", *r.attack_best_loss},
                       {"loss_trace", r.attack_loss_trace}};
    }
    if (r.mask_iou_after) j["mask_iou_after"] = *r.mask_iou_after;
    return j;
}

VariantRecord record_from_json(const nlohmann::json& j) {
    VariantRecord r;
    r.source_id = j.at("source_id").get<std::string>();
    r.class_label = j.at("class_label").get<std::string>();
    r.variant_name = j.at("variant_name").get<std::string>();
    r.prompt_text = j.at("prompt_text").get<std::string>();
    r.seed = j.at("seed").get<uint64_t>();
    r.lambda = j.at("lambda").get<double>();
    r.num_steps = j.at("num_steps").get<int>();
    r.strength = j.at("strength").get<double>();
    r.dilation_radius = j.at("dilation_radius").get<int>();
    r.output_path = j.at("output_path").get<std::string>();
    r.skipped = j.at("skipped").get<bool>();
    if (r.skipped) r.skip_reason = j.value("skip_reason", "");
    if (j.contains("attack")) {
        const auto& a = j.at("attack");
        r.attack_iterations = a.at("iterations").get<int>();
        r.attack_learning_rate = a.at("learning_rate").get<double>();
        r.attack_start_step = a.at("start_step").get<int>();
        r.attack_initial_loss = a.at("initial_loss").get<double>();
        r.attack_final_loss = a.at("final_loss").get<double>();
        r.attack_best_loss = a.at("best_loss").get<double>();
        r.attack_loss_trace = a.at("loss_trace").get<std::vector<double>>();
    }
    if (j.contains("mask_iou_after")) r.mask_iou_after = j.at("mask_iou_after").get<double>();
    return r;
}

}  // namespace

bool Manifest::contains(const std::string& key) const { return find(key) != nullptr; }

const VariantRecord* Manifest::find(const std::string& key) const {
    for (const auto& r : records)
        if (r.key() == key) return &r;
    return nullptr;
}

Manifest read_manifest(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot read manifest: " + file.string());
    Manifest m;
    std::string line;
    bool saw_header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        const std::string type = j.value("type", "record");
        if (type == "header") {
            m.header.schema_version = j.at("schema_version").get<int>();
            m.header.global_seeds = j.at("global_seeds").get<std::vector<uint64_t>>();
            saw_header = true;
        } else {
            m.records.push_back(record_from_json(j));
        }
    }
    if (!saw_header) throw ValidationError("manifest missing header record: " + file.string());
    return m;
}

void write_manifest(const fs::path& file, const Manifest& manifest) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write manifest: " + file.string());
    nlohmann::json h{{"type", "header"},
                     {"schema_version", manifest.header.schema_version},
                     {"global_seeds", manifest.header.global_seeds}};
    out << h.dump() << "\n";
    for (const auto& r : manifest.records) out << record_to_json(r).dump() << "\n";
}

void append_records(const fs::path& file, const std::vector<VariantRecord>& records) {
    std::ofstream out(file, std::ios::app);
    if (!out) throw IoError("cannot append to manifest: " + file.string());
    for (const auto& r : records) out << record_to_json(r).dump() << "\n";
}

void verify_manifest(const fs::path& manifest_file, const fs::path& dataset_dir) {
    const Manifest m = read_manifest(manifest_file);
    std::set<std::string> keys;
    std::set<std::string> referenced;
    for (const auto& r : m.records) {
        if (!keys.insert(r.key()).second)
            throw ValidationError("duplicate manifest key: " + r.source_id + "/" + r.variant_name);
        if (r.skipped) continue;
        if (r.output_path.empty()) throw ValidationError("non-skipped record without output: " + r.key());
        if (!referenced.insert(r.output_path).second)
            throw ValidationError("output referenced twice: " + r.output_path);
        const fs::path file = dataset_dir / r.output_path;
        if (!fs::exists(file)) throw ValidationError("missing output file: " + file.string());

        // Lossless round trip: decode, re-encode, compare bytes.
        const Image img = read_png(file);
        const fs::path tmp = file.string() + ".roundtrip";
        write_png(tmp, img);
        std::ifstream a(file, std::ios::binary), b(tmp, std::ios::binary);
        std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
        std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
        fs::remove(tmp);
        if (sa != sb) throw ValidationError("output does not round-trip losslessly: " + file.string());
    }
    // Every file under images/ must be referenced by exactly one record.
    const fs::path images = dataset_dir / "images";
    if (fs::exists(images)) {
        for (const auto& entry : fs::recursive_directory_iterator(images)) {
            if (!entry.is_regular_file()) continue;
            const std::string rel = fs::relative(entry.path(), dataset_dir).generic_string();
            if (!referenced.count(rel)) throw ValidationError("orphan file not in manifest: " + rel);
        }
    }
}

}  // namespace backdrop::dataset
