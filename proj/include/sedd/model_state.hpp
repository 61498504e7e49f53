// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>

#include "sedd/checkpoint.hpp"
#include "sedd/manifest.hpp"
#include "sedd/metric.hpp"
#include "sedd/style.hpp"

namespace sedd {

// The trained model plus everything needed to reproduce its embeddings:
// pipeline (backbone/head/preprocess), class centers, label map, configs.
class ModelState {
public:
    ModelState(StylePipelineConfig pipeline_cfg, TrainConfig train_cfg,
               LabelRegistry registry, std::string config_hash);

    StylePipeline& pipeline() { return *pipeline_; }
    ClassCenters& centers() { return centers_; }
    const LabelRegistry& registry() const { return registry_; }
    const TrainConfig& train_config() const { return train_cfg_; }
    const StylePipelineConfig& pipeline_config() const { return pipeline_cfg_; }
    const std::string& config_hash() const { return config_hash_; }

    void save(const std::filesystem::path& path);
    static ModelState load(const std::filesystem::path& path);

private:
    ModelState() = default;

    StylePipelineConfig pipeline_cfg_;
    TrainConfig train_cfg_;
    LabelRegistry registry_;
    std::string config_hash_;
    std::unique_ptr<StylePipeline> pipeline_;
    ClassCenters centers_;
};

}  // namespace sedd
