// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sedd/tensor.hpp"

namespace sedd {

// Versioned binary container for model state: a JSON metadata header (configs,
// label map, seed, config hash) followed by named float32 tensor blobs.
class Checkpoint {
public:
    static constexpr uint32_t kFormatVersion = 1;

    nlohmann::json meta;

    void add_tensor(const std::string& name, const Tensor& t);
    const Tensor* find_tensor(const std::string& name) const;
    const std::vector<std::pair<std::string, Tensor>>& tensors() const { return tensors_; }

    void save(const std::filesystem::path& path) const;
    static Checkpoint load(const std::filesystem::path& path);

private:
    std::vector<std::pair<std::string, Tensor>> tensors_;
};

}  // namespace sedd
