// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "sedd/backbone.hpp"
#include "sedd/embedding.hpp"
#include "sedd/manifest.hpp"
#include "sedd/preprocess.hpp"
#include "sedd/tensor.hpp"

namespace sedd {

using GramMatrix = Eigen::MatrixXf;
using GramVector = Eigen::VectorXd;

// Channel co-activation matrix G_ij = sum_{h,w} F_i(h,w) * F_j(h,w).
// Unnormalized; the pipeline optionally rescales by 1/(C*H*W) before
// vectorization so magnitudes stay comparable across input resolutions.
// Upper triangle is computed once and mirrored, so symmetry is exact.
GramMatrix gram_matrix(const FeatureMap& feature);

constexpr int64_t gram_vector_length(int64_t channels) {
    return channels * (channels + 1) / 2;
}

// Row-major upper triangle (diagonal included): (G11, G12, .., G1C, G22, ..).
GramVector gram_to_vector(const GramMatrix& gram);

// Inverse of gram_to_vector (exact on symmetric matrices).
Eigen::MatrixXd vector_to_gram(const GramVector& v);

// gram_to_vector(gram_matrix(F)) with optional 1/(C*H*W) normalization.
GramVector gram_vector(const FeatureMap& feature, bool normalize);

// Gradient of a scalar loss w.r.t. the feature map, given the gradient
// w.r.t. the (possibly normalized) Gram vector.
Tensor gram_vector_backward(const FeatureMap& feature, const GramVector& d_vec,
                            bool normalize);

struct ProjectionHeadConfig {
    // Full layer-width chain [input, hidden..., output]; a ReLU sits between
    // consecutive linear layers (none after the last).
    std::vector<int> widths;
    uint64_t init_seed = 1;
};

// Fully connected projection from Gram vectors to style embeddings. Runs in
// double precision; the backbone below it stays float.
class ProjectionHead {
public:
    explicit ProjectionHead(const ProjectionHeadConfig& config);

    struct Linear {
        Eigen::MatrixXd weight;  // (out, in)
        Eigen::VectorXd bias;
        Eigen::MatrixXd grad_weight;
        Eigen::VectorXd grad_bias;
    };

    // Columns are samples. forward caches activations for backward.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& v);
    Eigen::MatrixXd backward(const Eigen::MatrixXd& d_out);

    // Single-sample inference; does not touch the training caches.
    Eigen::VectorXd project(const Eigen::VectorXd& v) const;

    void zero_grad();
    int in_dim() const { return static_cast<int>(layers_.front().weight.cols()); }
    int out_dim() const { return static_cast<int>(layers_.back().weight.rows()); }
    std::vector<Linear>& layers() { return layers_; }
    const std::vector<Linear>& layers() const { return layers_; }
    int64_t num_parameters() const;

private:
    std::vector<Linear> layers_;
    std::vector<Eigen::MatrixXd> inputs_;  // cached per-layer inputs
};

Eigen::VectorXd project(const GramVector& v, const ProjectionHead& head);

struct StylePipelineConfig {
    BackboneConfig backbone;
    PreprocessSpec preprocess;
    std::vector<int> head_hidden = {512};  // widths between gram vector and output
    int embedding_dim = 64;
    uint64_t head_init_seed = 1;
    bool gram_normalize = true;
    int batch_size = 32;
};

// Backbone + Gram statistics + projection head. One instance owns the whole
// image -> style-embedding path for both training and inference.
class StylePipeline {
public:
    explicit StylePipeline(const StylePipelineConfig& config);

    // Inference: one embedding per record, class labels from the registry.
    EmbeddingTable embed_records(const std::vector<ImageRecord>& records,
                                 const LabelRegistry& labels);

    // Training-mode forward for a preprocessed image batch; returns embeddings
    // as columns and keeps caches for backward_batch.
    Eigen::MatrixXd forward_batch(const Tensor& images);
    void backward_batch(const Eigen::MatrixXd& d_embeddings);

    Eigen::VectorXd embed_image(const Tensor& image);

    ResNetBackbone& backbone() { return *backbone_; }
    ProjectionHead& head() { return *head_; }
    const StylePipelineConfig& config() const { return config_; }
    void zero_grad();

private:
    StylePipelineConfig config_;
    std::unique_ptr<ResNetBackbone> backbone_;
    std::unique_ptr<ProjectionHead> head_;
    Tensor cached_features_;  // (N,C,h,w) from the last forward_batch
};

}  // namespace sedd
