// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#include "backdrop/nn/serialize.hpp"

#include <cstdint>
#include <fstream>

#include "backdrop/core/errors.hpp"

namespace backdrop::nn {

namespace {
constexpr char kMagic[6] = {'B', 'K', 'D', 'W', '0', '1'};
}

void save_weights(const std::filesystem::path& file, const std::vector<ParamRef<float>>& params,
                  const nlohmann::json& meta) {
    nlohmann::json header;
    header["dtype"] = "f32";
    header["meta"] = meta;
    nlohmann::json index = nlohmann::json::array();
    for (const auto& p : params) {
        index.push_back({{"name", p.name}, {"shape", p.tensor->shape()}});
    }
    header["tensors"] = index;
    const std::string hs = header.dump();

    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot open for write: " + file.string());
    out.write(kMagic, sizeof(kMagic));
    const uint64_t hlen = hs.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& p : params) {
        out.write(reinterpret_cast<const char*>(p.tensor->data()),
                  static_cast<std::streamsize>(p.tensor->size() * sizeof(float)));
    }
    if (!out) throw IoError("write failed: " + file.string());
}

nlohmann::json load_weights(const std::filesystem::path& file, const std::vector<ParamRef<float>>& params) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open for read: " + file.string());
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::string(magic, sizeof(magic)) != std::string(kMagic, sizeof(kMagic)))
        throw IoError("bad weight container magic: " + file.string());
    uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string hs(hlen, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw IoError("truncated header: " + file.string());
    nlohmann::json header = nlohmann::json::parse(hs);

    const auto& index = header.at("tensors");
    if (index.size() != params.size()) throw IoError("tensor count mismatch in " + file.string());
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& entry = index[i];
        if (entry.at("name").get<std::string>() != params[i].name)
            throw IoError("tensor name mismatch: expected " + params[i].name);
        const auto shape = entry.at("shape").get<std::vector<int>>();
        if (shape != params[i].tensor->shape()) throw IoError("tensor shape mismatch for " + params[i].name);
        in.read(reinterpret_cast<char*>(params[i].tensor->data()),
                static_cast<std::streamsize>(params[i].tensor->size() * sizeof(float)));
        if (!in) throw IoError("truncated payload: " + file.string());
    }
    return header.at("meta");
}

}  // namespace backdrop::nn
