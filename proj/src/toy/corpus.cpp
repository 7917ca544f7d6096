// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#include "backdrop/toy/corpus.hpp"

#include <fstream>

#include <json.hpp>

#include "backdrop/core/image_io.hpp"

namespace backdrop::toy {

namespace fs = std::filesystem;

void write_corpus(const std::vector<ShapesScene>& scenes, const fs::path& dir) {
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "masks");
    std::ofstream meta(dir / "scenes.jsonl");
    if (!meta) throw IoError("cannot write corpus metadata in " + dir.string());
    for (const auto& scene : scenes) {
        write_png(dir / "images" / (scene.id + ".png"), scene.image);
        write_mask_png(dir / "masks" / (scene.id + ".png"), scene.ground_truth_mask.values);
        nlohmann::json j{{"id", scene.id},
                         {"class_label", scene.class_label},
                         {"class_index", scene.class_index},
                         {"background", scene.background_descriptor},
                         {"caption", scene.caption}};
        meta << j.dump() << "\n";
    }
}

std::vector<ShapesScene> load_corpus(const fs::path& dir) {
    std::ifstream meta(dir / "scenes.jsonl");
    if (!meta) throw IoError("cannot read corpus metadata in " + dir.string());
    std::vector<ShapesScene> scenes;
    std::string line;
    while (std::getline(meta, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        ShapesScene scene;
        scene.id = j.at("id").get<std::string>();
        scene.class_label = j.at("class_label").get<std::string>();
        scene.class_index = j.at("class_index").get<int>();
        scene.background_descriptor = j.at("background").get<std::string>();
        scene.caption = j.at("caption").get<std::string>();
        scene.image = read_png(dir / "images" / (scene.id + ".png"));
        scene.ground_truth_mask.values = read_mask_png(dir / "masks" / (scene.id + ".png"));
        scenes.push_back(std::move(scene));
    }
    return scenes;
}

}  // namespace backdrop::toy
