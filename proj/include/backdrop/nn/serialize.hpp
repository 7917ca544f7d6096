// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "backdrop/nn/layers.hpp"

namespace backdrop::nn {

/// Weight container: magic + JSON header (tensor index, arbitrary metadata)
/// followed by raw little-endian float32 payload. Round-trips bit-exactly.
void save_weights(const std::filesystem::path& file, const std::vector<ParamRef<float>>& params,
                  const nlohmann::json& meta);

/// Loads into pre-shaped tensors; throws IoError on magic/shape mismatch.
/// Returns the metadata block stored at save time.
nlohmann::json load_weights(const std::filesystem::path& file, const std::vector<ParamRef<float>>& params);

}  // namespace backdrop::nn
