// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sedd/metric.hpp"
#include "sedd/sedd_metrics.hpp"
#include "sedd/style.hpp"

namespace sedd {

// Everything a run needs, mirrored 1:1 by the JSON config file. The FNV-1a
// hash of the canonical serialization is stamped into every artifact the run
// produces.
struct RunConfig {
    std::vector<std::string> manifests;
    PreprocessSpec preprocess;
    BackboneConfig backbone;
    TrainConfig train;
    KernelParams kernel;
    SplitRatios split_ratios;
    std::vector<int> head_hidden = {512};
    int embedding_dim = 64;
    bool gram_normalize = true;
    uint64_t seed = 0;
    std::string out_dir = "runs/default";
    bool deterministic = false;
    // Existing checkpoint to score with; empty means the run trains first.
    std::string checkpoint;
    // Evaluation split for benchmark/profile rows ("train"|"val"|"test"|"all").
    std::string eval_split = "val";
    // Dataset whose center distance the hyperparameter sweep reports; empty
    // means the first synthetic manifest.
    std::string sweep_target;

    StylePipelineConfig pipeline_config() const;
    std::string config_hash() const;
};

nlohmann::json to_json(const PreprocessSpec& spec);
nlohmann::json to_json(const BackboneConfig& config);
nlohmann::json to_json(const TrainConfig& config);
nlohmann::json to_json(const KernelParams& params);
nlohmann::json to_json(const StylePipelineConfig& config);
nlohmann::json to_json(const RunConfig& config);

PreprocessSpec preprocess_from_json(const nlohmann::json& j);
BackboneConfig backbone_from_json(const nlohmann::json& j);
TrainConfig train_from_json(const nlohmann::json& j);
KernelParams kernel_from_json(const nlohmann::json& j);
StylePipelineConfig pipeline_from_json(const nlohmann::json& j);
RunConfig runconfig_from_json(const nlohmann::json& j);

RunConfig load_runconfig(const std::filesystem::path& path);

// FNV-1a 64-bit hex digest of a string (config fingerprinting).
std::string fnv1a_hex(const std::string& payload);

}  // namespace sedd
