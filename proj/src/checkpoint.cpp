// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedd/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "sedd/errors.hpp"

namespace sedd {

namespace {
constexpr char kMagic[8] = {'S', 'E', 'D', 'D', 'C', 'K', 'P', '1'};
}

void Checkpoint::add_tensor(const std::string& name, const Tensor& t) {
    for (auto& [n, existing] : tensors_) {
        if (n == name) {
            existing = t;
            return;
        }
    }
    tensors_.emplace_back(name, t);
}

const Tensor* Checkpoint::find_tensor(const std::string& name) const {
    for (const auto& [n, t] : tensors_)
        if (n == name) return &t;
    return nullptr;
}

void Checkpoint::save(const std::filesystem::path& path) const {
    nlohmann::json header;
    header["format_version"] = kFormatVersion;
    header["meta"] = meta;
    uint64_t offset = 0;
    nlohmann::json index = nlohmann::json::array();
    for (const auto& [name, t] : tensors_) {
        index.push_back({{"name", name}, {"shape", t.shape}, {"offset", offset}});
        offset += static_cast<uint64_t>(t.numel()) * sizeof(float);
    }
    header["tensors"] = index;
    const std::string hdr = header.dump();

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InitError("cannot open checkpoint for writing: " + path.string());
    out.write(kMagic, sizeof(kMagic));
    const uint64_t hdr_len = hdr.size();
    out.write(reinterpret_cast<const char*>(&hdr_len), sizeof(hdr_len));
    out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
    for (const auto& [name, t] : tensors_)
        out.write(reinterpret_cast<const char*>(t.ptr()),
                  static_cast<std::streamsize>(t.numel() * sizeof(float)));
    if (!out) throw InitError("failed writing checkpoint: " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InitError("checkpoint file not found: " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw InitError("not a sedd checkpoint (bad magic): " + path.string());
    uint64_t hdr_len = 0;
    in.read(reinterpret_cast<char*>(&hdr_len), sizeof(hdr_len));
    if (!in || hdr_len == 0 || hdr_len > (1ull << 30))
        throw InitError("corrupt checkpoint header: " + path.string());
    std::string hdr(hdr_len, '\0');
    in.read(hdr.data(), static_cast<std::streamsize>(hdr_len));
    if (!in) throw InitError("corrupt checkpoint header: " + path.string());

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hdr);
    } catch (const nlohmann::json::parse_error& e) {
        throw InitError("corrupt checkpoint header: " + std::string(e.what()));
    }
    if (header.value("format_version", 0u) != kFormatVersion)
        throw InitError("unsupported checkpoint format version in " + path.string());

    Checkpoint ckpt;
    ckpt.meta = header.value("meta", nlohmann::json::object());
    for (const auto& entry : header["tensors"]) {
        Tensor t(entry["shape"].get<std::vector<int64_t>>());
        in.read(reinterpret_cast<char*>(t.ptr()),
                static_cast<std::streamsize>(t.numel() * sizeof(float)));
        if (!in) throw InitError("checkpoint truncated: " + path.string());
        ckpt.tensors_.emplace_back(entry["name"].get<std::string>(), std::move(t));
    }
    return ckpt;
}

}  // namespace sedd
