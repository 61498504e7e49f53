// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sedd/embedding.hpp"
#include "sedd/tsne.hpp"

namespace sedd {

struct VisualizeResult {
    std::filesystem::path plot_path;
    std::filesystem::path coords_path;
    int points = 0;
};

// Subsamples at most `cap` rows per dataset (seeded), projects to 2-d with
// t-SNE and writes a scatter plot (color = dataset, marker = weather) plus a
// coordinates table. The outputs carry a reminder that t-SNE shapes are not
// comparable across runs.
VisualizeResult run_visualize(const std::vector<std::filesystem::path>& embedding_files,
                              int cap, uint64_t seed,
                              const std::filesystem::path& out_dir,
                              const TsneParams& tsne = {},
                              const std::string& config_hash = {});

}  // namespace sedd
