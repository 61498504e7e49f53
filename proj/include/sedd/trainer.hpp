// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "sedd/manifest.hpp"
#include "sedd/metric.hpp"
#include "sedd/model_state.hpp"
#include "sedd/style.hpp"

namespace sedd {

struct TrainLogRow {
    int epoch = 0;
    int iteration = 0;  // global iteration index
    double ntxent = 0.0;
    double center = 0.0;
    double total = 0.0;
    double eta_c = 0.0;
    int skipped_anchors = 0;
};

struct TrainResult {
    std::filesystem::path checkpoint_path;
    std::filesystem::path log_path;
    std::filesystem::path reference_path;  // real-class train-split embeddings
    std::vector<TrainLogRow> log;
};

// Joint metric-learning loop: embed a class-balanced batch, push embeddings
// to the cross-batch memory, mine hard pairs from batch + memory, take one
// momentum-SGD step on backbone and head from L_NTXent + lambda * L_C, then
// move the class centers with the decayed center learning rate. Writes the
// checkpoint, a CSV loss log and the real-reference embeddings to out_dir.
TrainResult train(const std::vector<DatasetManifest>& manifests, const TrainConfig& config,
                  const StylePipelineConfig& pipeline_config, const LabelRegistry& registry,
                  const std::filesystem::path& out_dir, const std::string& config_hash = {});

// Same loop without any filesystem output; returns the trained model.
// Exposed for tests and the hyperparameter sweep.
struct InMemoryTrainResult {
    std::unique_ptr<ModelState> model;
    std::vector<TrainLogRow> log;
};
InMemoryTrainResult train_in_memory(const std::vector<DatasetManifest>& manifests,
                                    const TrainConfig& config,
                                    const StylePipelineConfig& pipeline_config,
                                    const LabelRegistry& registry,
                                    const std::string& config_hash = {},
                                    std::vector<TrainLogRow>* live_log = nullptr);

}  // namespace sedd
