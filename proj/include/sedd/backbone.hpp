// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sedd/manifest.hpp"
#include "sedd/preprocess.hpp"
#include "sedd/tensor.hpp"

namespace sedd {

// Shallow-stage activations of the truncated backbone, laid out (C, H, W).
using FeatureMap = Tensor;

enum class WeightsSource { kPretrainedClassification, kFile };

std::string to_string(WeightsSource w);
WeightsSource weights_source_from_string(const std::string& s);

struct BackboneConfig {
    std::string architecture_id = "resnet18";
    // Residual stage after which the network is truncated (1..4).
    int truncation_layer = 1;
    WeightsSource weights_source = WeightsSource::kPretrainedClassification;
    // Checkpoint path for weights_source == kFile.
    std::string weights_path;
    bool frozen = false;
    // Seed of the reference initialization stream used when no pretrained
    // checkpoint is available (see README on weight provenance).
    uint64_t init_seed = 0x5EDD;
};

// Named parameter with its gradient accumulator.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    bool weight_decay = true;
};

namespace nn {

class Conv2d {
public:
    Conv2d() = default;
    Conv2d(std::string name, int in_ch, int out_ch, int kernel, int stride, int pad);

    Tensor forward(const Tensor& x);          // (N,Cin,H,W) -> (N,Cout,Ho,Wo)
    // dx is skipped when need_input_grad is false (first layer).
    Tensor backward(const Tensor& dy, bool need_input_grad = true);

    Param weight;  // (out, in, k, k); bias-free as in residual backbones
    int in_ch = 0, out_ch = 0, kernel = 0, stride = 1, pad = 0;

private:
    Tensor input_;  // cached activation for the backward pass
};

// Normalization layer that always runs with frozen (inference) statistics so
// feature distributions do not depend on batch composition. gamma/beta stay
// trainable.
class BatchNorm2d {
public:
    BatchNorm2d() = default;
    BatchNorm2d(std::string name, int channels);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);

    Param gamma, beta;
    Tensor running_mean, running_var;  // fixed buffers
    static constexpr float kEps = 1e-5f;

private:
    Tensor input_;
    int channels_ = 0;
};

class ReLU {
public:
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy) const;

private:
    std::vector<uint8_t> mask_;
};

class MaxPool2d {
public:
    MaxPool2d(int kernel, int stride, int pad) : kernel_(kernel), stride_(stride), pad_(pad) {}

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy) const;

private:
    int kernel_, stride_, pad_;
    std::vector<int64_t> argmax_;
    std::vector<int64_t> in_shape_;
};

struct BasicBlock {
    BasicBlock(const std::string& name, int in_ch, int out_ch, int stride);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy, bool need_input_grad);
    void collect(std::vector<Param*>& out);

    Conv2d conv1, conv2;
    BatchNorm2d bn1, bn2;
    ReLU relu1, relu2;
    std::optional<Conv2d> down_conv;
    std::optional<BatchNorm2d> down_bn;
};

}  // namespace nn

// 18-layer residual backbone (stem + four stages of two basic blocks),
// truncated at a configurable stage. Forward/backward are hand-wired; the
// backward pass accumulates parameter gradients for the trainer.
class ResNetBackbone {
public:
    explicit ResNetBackbone(const BackboneConfig& config);

    // Batched forward through the stem and stages [1..truncation]. Caches
    // activations for backward.
    Tensor forward(const Tensor& batch);
    // Forward to an explicit stage without touching the caches used by
    // training (used by the layer probe).
    Tensor forward_to_stage(const Tensor& batch, int stage);
    // Propagates gradients; no-op on parameters when config.frozen.
    void backward(const Tensor& d_out);

    // Single-image convenience wrapper around forward: (3,H,W) -> (C,H',W').
    FeatureMap extract(const Tensor& image);

    std::vector<Param*> parameters();
    // Parameters plus fixed buffers, for checkpointing.
    std::vector<std::pair<std::string, Tensor*>> named_tensors();
    void zero_grad();

    int out_channels() const { return stage_channels(config_.truncation_layer); }
    const BackboneConfig& config() const { return config_; }

    static int stage_channels(int stage);  // 64, 128, 256, 512
    static constexpr int kNumStages = 4;

private:
    void init_reference_weights(uint64_t seed);
    void load_weights_file(const std::filesystem::path& path);

    BackboneConfig config_;
    nn::Conv2d conv1_;
    nn::BatchNorm2d bn1_;
    nn::ReLU relu_;
    nn::MaxPool2d maxpool_{3, 2, 1};
    std::vector<nn::BasicBlock> blocks_;  // all four stages, two blocks each
    int cached_depth_ = 0;                // blocks traversed by last forward
};

// One-off extraction per the module contract; builds a backbone from config.
FeatureMap extract(const Tensor& image, const BackboneConfig& config);

// Writes one flattened-feature table per requested stage for downstream
// visualization. Returns the written file paths. Requires a non-empty sample;
// logs a warning when fewer than two datasets are present.
std::vector<std::filesystem::path> probe_layers(const std::vector<ImageRecord>& records,
                                                const std::vector<int>& layers,
                                                const BackboneConfig& config,
                                                const PreprocessSpec& preprocess,
                                                const std::filesystem::path& out_dir);

}  // namespace sedd
