// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedd/style.hpp"

#include <random>

namespace sedd {

namespace {
using RowMatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
}

GramMatrix gram_matrix(const FeatureMap& feature) {
    if (feature.rank() != 3)
        throw ValidationError("gram_matrix expects a (C,H,W) feature map, got " +
                              feature.shape_str());
    if (!all_finite(feature))
        throw NumericError("gram_matrix: feature map contains non-finite values");
    const int C = static_cast<int>(feature.dim(0));
    const int64_t span = feature.dim(1) * feature.dim(2);
    Eigen::Map<const RowMatF> flat(feature.ptr(), C, span);

    GramMatrix gram = GramMatrix::Zero(C, C);
    gram.selfadjointView<Eigen::Upper>().rankUpdate(flat);
    // mirror the computed upper triangle so symmetry is exact
    for (int i = 0; i < C; ++i)
        for (int j = i + 1; j < C; ++j) gram(j, i) = gram(i, j);
    return gram;
}

GramVector gram_to_vector(const GramMatrix& gram) {
    if (gram.rows() != gram.cols())
        throw ValidationError("gram_to_vector expects a square matrix");
    if (gram != gram.transpose())
        throw ValidationError("gram_to_vector expects a symmetric matrix");
    const int C = static_cast<int>(gram.rows());
    GramVector v(gram_vector_length(C));
    int64_t k = 0;
    for (int i = 0; i < C; ++i)
        for (int j = i; j < C; ++j) v[k++] = static_cast<double>(gram(i, j));
    return v;
}

Eigen::MatrixXd vector_to_gram(const GramVector& v) {
    const int64_t len = v.size();
    const int64_t c_est = static_cast<int64_t>((std::sqrt(8.0 * len + 1.0) - 1.0) / 2.0 + 0.5);
    if (gram_vector_length(c_est) != len)
        throw ValidationError("vector of length " + std::to_string(len) +
                              " is not an upper-triangle flattening");
    Eigen::MatrixXd gram(c_est, c_est);
    int64_t k = 0;
    for (int64_t i = 0; i < c_est; ++i)
        for (int64_t j = i; j < c_est; ++j) {
            gram(i, j) = v[k];
            gram(j, i) = v[k];
            ++k;
        }
    return gram;
}

GramVector gram_vector(const FeatureMap& feature, bool normalize) {
    GramMatrix gram = gram_matrix(feature);
    if (normalize) gram *= 1.0f / static_cast<float>(feature.numel());
    return gram_to_vector(gram);
}

Tensor gram_vector_backward(const FeatureMap& feature, const GramVector& d_vec,
                            bool normalize) {
    const int C = static_cast<int>(feature.dim(0));
    const int64_t span = feature.dim(1) * feature.dim(2);
    if (d_vec.size() != gram_vector_length(C))
        throw ValidationError("gram gradient length mismatch");

    // dL/dF = (S + diag(S)) F with S the symmetric matrix carrying the
    // upper-triangle gradient entries.
    Eigen::MatrixXd coeff(C, C);
    int64_t k = 0;
    for (int i = 0; i < C; ++i)
        for (int j = i; j < C; ++j) {
            coeff(i, j) = d_vec[k];
            coeff(j, i) = d_vec[k];
            ++k;
        }
    coeff.diagonal() *= 2.0;
    if (normalize) coeff *= 1.0 / static_cast<double>(feature.numel());

    Eigen::Map<const RowMatF> flat(feature.ptr(), C, span);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> d_flat =
        coeff * flat.cast<double>();

    Tensor out(feature.shape);
    Eigen::Map<RowMatF>(out.ptr(), C, span) = d_flat.cast<float>();
    return out;
}

ProjectionHead::ProjectionHead(const ProjectionHeadConfig& config) {
    if (config.widths.size() < 2)
        throw ValidationError("projection head needs at least [input, output] widths");
    std::mt19937_64 rng(config.init_seed);
    for (size_t l = 0; l + 1 < config.widths.size(); ++l) {
        const int in = config.widths[l], out = config.widths[l + 1];
        if (in <= 0 || out <= 0) throw ValidationError("head widths must be positive");
        Linear layer;
        layer.weight.resize(out, in);
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / in));
        for (int r = 0; r < out; ++r)
            for (int c = 0; c < in; ++c) layer.weight(r, c) = dist(rng);
        layer.bias = Eigen::VectorXd::Zero(out);
        layer.grad_weight = Eigen::MatrixXd::Zero(out, in);
        layer.grad_bias = Eigen::VectorXd::Zero(out);
        layers_.push_back(std::move(layer));
    }
}

Eigen::MatrixXd ProjectionHead::forward(const Eigen::MatrixXd& v) {
    if (v.rows() != in_dim())
        throw ValidationError("projection head: input width " + std::to_string(v.rows()) +
                              " does not match head input " + std::to_string(in_dim()));
    inputs_.clear();
    Eigen::MatrixXd x = v;
    for (size_t l = 0; l < layers_.size(); ++l) {
        inputs_.push_back(x);
        x = (layers_[l].weight * x).colwise() + layers_[l].bias;
        if (l + 1 < layers_.size()) x = x.cwiseMax(0.0);
    }
    return x;
}

Eigen::MatrixXd ProjectionHead::backward(const Eigen::MatrixXd& d_out) {
    if (inputs_.size() != layers_.size())
        throw NumericError("projection head backward called without a cached forward");
    Eigen::MatrixXd d = d_out;
    for (size_t li = layers_.size(); li-- > 0;) {
        Linear& layer = layers_[li];
        const Eigen::MatrixXd& x = inputs_[li];
        if (li + 1 < layers_.size()) {
            // ReLU mask of this layer's output, recomputed from the cached input
            Eigen::MatrixXd pre = (layer.weight * x).colwise() + layer.bias;
            d = (pre.array() > 0.0).select(d, 0.0);
        }
        layer.grad_weight.noalias() += d * x.transpose();
        layer.grad_bias.noalias() += d.rowwise().sum();
        d = layer.weight.transpose() * d;
    }
    return d;
}

Eigen::VectorXd ProjectionHead::project(const Eigen::VectorXd& v) const {
    if (v.size() != in_dim())
        throw ValidationError("projection head: input width " + std::to_string(v.size()) +
                              " does not match head input " + std::to_string(in_dim()));
    Eigen::VectorXd x = v;
    for (size_t l = 0; l < layers_.size(); ++l) {
        x = layers_[l].weight * x + layers_[l].bias;
        if (l + 1 < layers_.size()) x = x.cwiseMax(0.0);
    }
    return x;
}

void ProjectionHead::zero_grad() {
    for (auto& layer : layers_) {
        layer.grad_weight.setZero();
        layer.grad_bias.setZero();
    }
}

int64_t ProjectionHead::num_parameters() const {
    int64_t n = 0;
    for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
    return n;
}

Eigen::VectorXd project(const GramVector& v, const ProjectionHead& head) {
    return head.project(v);
}

StylePipeline::StylePipeline(const StylePipelineConfig& config) : config_(config) {
    backbone_ = std::make_unique<ResNetBackbone>(config.backbone);
    ProjectionHeadConfig head_cfg;
    head_cfg.widths.push_back(
        static_cast<int>(gram_vector_length(backbone_->out_channels())));
    for (int w : config.head_hidden) head_cfg.widths.push_back(w);
    head_cfg.widths.push_back(config.embedding_dim);
    head_cfg.init_seed = config.head_init_seed;
    head_ = std::make_unique<ProjectionHead>(head_cfg);
}

Eigen::MatrixXd StylePipeline::forward_batch(const Tensor& images) {
    cached_features_ = backbone_->forward(images);
    const int N = static_cast<int>(cached_features_.dim(0));
    const int64_t per = cached_features_.numel() / N;
    Eigen::MatrixXd v(head_->in_dim(), N);
    for (int n = 0; n < N; ++n) {
        FeatureMap fm({cached_features_.dim(1), cached_features_.dim(2),
                       cached_features_.dim(3)});
        std::copy_n(cached_features_.ptr() + static_cast<size_t>(n) * per, per,
                    fm.ptr());
        v.col(n) = gram_vector(fm, config_.gram_normalize);
    }
    return head_->forward(v);
}

void StylePipeline::backward_batch(const Eigen::MatrixXd& d_embeddings) {
    Eigen::MatrixXd dv = head_->backward(d_embeddings);
    const int N = static_cast<int>(cached_features_.dim(0));
    const int64_t per = cached_features_.numel() / N;
    Tensor d_features(cached_features_.shape);
    for (int n = 0; n < N; ++n) {
        FeatureMap fm({cached_features_.dim(1), cached_features_.dim(2),
                       cached_features_.dim(3)});
        std::copy_n(cached_features_.ptr() + static_cast<size_t>(n) * per, per, fm.ptr());
        Tensor dfm = gram_vector_backward(fm, dv.col(n), config_.gram_normalize);
        std::copy_n(dfm.ptr(), per, d_features.ptr() + static_cast<size_t>(n) * per);
    }
    backbone_->backward(d_features);
}

Eigen::VectorXd StylePipeline::embed_image(const Tensor& image) {
    FeatureMap fm = backbone_->extract(image);
    return head_->project(gram_vector(fm, config_.gram_normalize));
}

EmbeddingTable StylePipeline::embed_records(const std::vector<ImageRecord>& records,
                                            const LabelRegistry& labels) {
    EmbeddingTable table;
    for (const auto& rec : records) {
        Tensor img = decode_and_preprocess(rec, config_.preprocess);
        StyleEmbedding emb;
        emb.data = embed_image(img);
        emb.path = rec.path;
        emb.dataset_id = rec.dataset_id;
        emb.class_label = labels.label_of(rec.dataset_id);
        emb.weather = rec.weather;
        emb.scene_id = rec.scene_id;
        emb.split = rec.split;
        table.append(std::move(emb));
    }
    return table;
}

void StylePipeline::zero_grad() {
    backbone_->zero_grad();
    head_->zero_grad();
}

}  // namespace sedd
