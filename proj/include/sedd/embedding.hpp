// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

#include "sedd/manifest.hpp"

namespace sedd {

// One style embedding (or any flattened feature row) with its provenance.
struct StyleEmbedding {
    Eigen::VectorXd data;
    std::string path;
    std::string dataset_id;
    int class_label = -1;
    std::string weather;
    std::string scene_id;
    Split split = Split::kUnassigned;
};

// Version-tagged tabular dump shared by the profiler, the layer probe and the
// visualizer. Text format: a "# sedd-embeddings v1 dim=D" header followed by
// one TSV row per sample.
struct EmbeddingTable {
    int dim = 0;
    std::vector<StyleEmbedding> rows;

    void append(StyleEmbedding e);
    std::vector<std::string> dataset_ids() const;  // unique, in file order
};

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

}  // namespace sedd
