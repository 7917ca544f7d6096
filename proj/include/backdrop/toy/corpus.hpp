// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "backdrop/toy/scenes.hpp"

namespace backdrop::toy {

/// On-disk corpus layout:
///   <dir>/images/<id>.png
///   <dir>/masks/<id>.png
///   <dir>/scenes.jsonl   (one record per scene: id, class, background, caption)
void write_corpus(const std::vector<ShapesScene>& scenes, const std::filesystem::path& dir);

/// Loads a corpus written by write_corpus. Images come back quantized to the
/// 8-bit grid (k/255), which is what every downstream consumer sees.
std::vector<ShapesScene> load_corpus(const std::filesystem::path& dir);

}  // namespace backdrop::toy
