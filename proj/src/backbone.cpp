// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedd/backbone.hpp"

#include <Eigen/Core>
#include <cstring>
#include <iostream>
#include <random>

#include "sedd/checkpoint.hpp"
#include "sedd/embedding.hpp"

namespace sedd {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

std::string to_string(WeightsSource w) {
    return w == WeightsSource::kFile ? "file" : "pretrained_classification";
}

WeightsSource weights_source_from_string(const std::string& s) {
    if (s == "file") return WeightsSource::kFile;
    if (s == "pretrained_classification") return WeightsSource::kPretrainedClassification;
    throw ValidationError("unknown weights_source '" + s + "'");
}

namespace nn {

namespace {

int conv_out_extent(int in, int kernel, int stride, int pad) {
    return (in + 2 * pad - kernel) / stride + 1;
}

// Unpacks one sample (C,H,W) into a (C*k*k, Ho*Wo) patch matrix.
void im2col(const float* in, int C, int H, int W, int k, int stride, int pad, float* col,
            int Ho, int Wo) {
    const int span = Ho * Wo;
    for (int c = 0; c < C; ++c) {
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
                float* dst = col + ((static_cast<size_t>(c) * k + ki) * k + kj) * span;
                for (int y = 0; y < Ho; ++y) {
                    const int sy = y * stride - pad + ki;
                    if (sy < 0 || sy >= H) {
                        std::memset(dst + static_cast<size_t>(y) * Wo, 0,
                                    sizeof(float) * Wo);
                        continue;
                    }
                    const float* src = in + (static_cast<size_t>(c) * H + sy) * W;
                    for (int x = 0; x < Wo; ++x) {
                        const int sx = x * stride - pad + kj;
                        dst[static_cast<size_t>(y) * Wo + x] =
                            (sx >= 0 && sx < W) ? src[sx] : 0.0f;
                    }
                }
            }
        }
    }
}

void col2im(const float* col, int C, int H, int W, int k, int stride, int pad, float* in,
            int Ho, int Wo) {
    const int span = Ho * Wo;
    std::memset(in, 0, sizeof(float) * C * H * W);
    for (int c = 0; c < C; ++c) {
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
                const float* src = col + ((static_cast<size_t>(c) * k + ki) * k + kj) * span;
                for (int y = 0; y < Ho; ++y) {
                    const int sy = y * stride - pad + ki;
                    if (sy < 0 || sy >= H) continue;
                    float* dst = in + (static_cast<size_t>(c) * H + sy) * W;
                    for (int x = 0; x < Wo; ++x) {
                        const int sx = x * stride - pad + kj;
                        if (sx >= 0 && sx < W) dst[sx] += src[static_cast<size_t>(y) * Wo + x];
                    }
                }
            }
        }
    }
}

}  // namespace

Conv2d::Conv2d(std::string name, int in_ch_, int out_ch_, int kernel_, int stride_, int pad_)
    : in_ch(in_ch_), out_ch(out_ch_), kernel(kernel_), stride(stride_), pad(pad_) {
    weight.name = std::move(name);
    weight.value = Tensor({out_ch, in_ch, kernel, kernel});
    weight.grad = Tensor(weight.value.shape);
}

Tensor Conv2d::forward(const Tensor& x) {
    if (x.rank() != 4 || x.dim(1) != in_ch)
        throw ValidationError("conv " + weight.name + ": input shape " + x.shape_str() +
                              " does not match in_ch=" + std::to_string(in_ch));
    input_ = x;
    const int N = static_cast<int>(x.dim(0)), H = static_cast<int>(x.dim(2)),
              W = static_cast<int>(x.dim(3));
    const int Ho = conv_out_extent(H, kernel, stride, pad);
    const int Wo = conv_out_extent(W, kernel, stride, pad);
    if (Ho <= 0 || Wo <= 0)
        throw ValidationError("conv " + weight.name + ": input spatial extent too small");
    const int K = in_ch * kernel * kernel;

    Tensor out({N, out_ch, Ho, Wo});
    std::vector<float> col(static_cast<size_t>(K) * Ho * Wo);
    ConstMapMat wmat(weight.value.ptr(), out_ch, K);
    for (int n = 0; n < N; ++n) {
        im2col(x.ptr() + static_cast<size_t>(n) * in_ch * H * W, in_ch, H, W, kernel, stride,
               pad, col.data(), Ho, Wo);
        ConstMapMat cmat(col.data(), K, Ho * Wo);
        MapMat omat(out.ptr() + static_cast<size_t>(n) * out_ch * Ho * Wo, out_ch, Ho * Wo);
        omat.noalias() = wmat * cmat;
    }
    return out;
}

Tensor Conv2d::backward(const Tensor& dy, bool need_input_grad) {
    const Tensor& x = input_;
    const int N = static_cast<int>(x.dim(0)), H = static_cast<int>(x.dim(2)),
              W = static_cast<int>(x.dim(3));
    const int Ho = static_cast<int>(dy.dim(2)), Wo = static_cast<int>(dy.dim(3));
    const int K = in_ch * kernel * kernel;

    Tensor dx;
    if (need_input_grad) dx = Tensor(x.shape);
    std::vector<float> col(static_cast<size_t>(K) * Ho * Wo);
    std::vector<float> dcol(need_input_grad ? col.size() : 0);
    MapMat gmat(weight.grad.ptr(), out_ch, K);
    ConstMapMat wmat(weight.value.ptr(), out_ch, K);
    for (int n = 0; n < N; ++n) {
        im2col(x.ptr() + static_cast<size_t>(n) * in_ch * H * W, in_ch, H, W, kernel, stride,
               pad, col.data(), Ho, Wo);
        ConstMapMat cmat(col.data(), K, Ho * Wo);
        ConstMapMat dymat(dy.ptr() + static_cast<size_t>(n) * out_ch * Ho * Wo, out_ch,
                          Ho * Wo);
        gmat.noalias() += dymat * cmat.transpose();
        if (need_input_grad) {
            MapMat dcmat(dcol.data(), K, Ho * Wo);
            dcmat.noalias() = wmat.transpose() * dymat;
            col2im(dcol.data(), in_ch, H, W, kernel, stride, pad,
                   dx.ptr() + static_cast<size_t>(n) * in_ch * H * W, Ho, Wo);
        }
    }
    return dx;
}

BatchNorm2d::BatchNorm2d(std::string name, int channels) : channels_(channels) {
    gamma.name = name + ".gamma";
    gamma.value = Tensor({channels});
    std::fill(gamma.value.data.begin(), gamma.value.data.end(), 1.0f);
    gamma.grad = Tensor({channels});
    beta.name = name + ".beta";
    beta.value = Tensor({channels});
    beta.grad = Tensor({channels});
    running_mean = Tensor({channels});
    running_var = Tensor({channels});
    std::fill(running_var.data.begin(), running_var.data.end(), 1.0f);
}

Tensor BatchNorm2d::forward(const Tensor& x) {
    input_ = x;
    const int N = static_cast<int>(x.dim(0)), C = static_cast<int>(x.dim(1));
    const int64_t span = x.dim(2) * x.dim(3);
    Tensor out(x.shape);
    for (int n = 0; n < N; ++n) {
        for (int c = 0; c < C; ++c) {
            const float inv = 1.0f / std::sqrt(running_var.data[c] + kEps);
            const float scale = gamma.value.data[c] * inv;
            const float shift = beta.value.data[c] - running_mean.data[c] * scale;
            const float* src = x.ptr() + (static_cast<size_t>(n) * C + c) * span;
            float* dst = out.ptr() + (static_cast<size_t>(n) * C + c) * span;
            for (int64_t i = 0; i < span; ++i) dst[i] = src[i] * scale + shift;
        }
    }
    return out;
}

Tensor BatchNorm2d::backward(const Tensor& dy) {
    const int N = static_cast<int>(dy.dim(0)), C = static_cast<int>(dy.dim(1));
    const int64_t span = dy.dim(2) * dy.dim(3);
    Tensor dx(dy.shape);
    for (int c = 0; c < C; ++c) {
        const float inv = 1.0f / std::sqrt(running_var.data[c] + kEps);
        const float scale = gamma.value.data[c] * inv;
        double dgamma = 0.0, dbeta = 0.0;
        for (int n = 0; n < N; ++n) {
            const float* dsrc = dy.ptr() + (static_cast<size_t>(n) * C + c) * span;
            const float* xsrc = input_.ptr() + (static_cast<size_t>(n) * C + c) * span;
            float* dst = dx.ptr() + (static_cast<size_t>(n) * C + c) * span;
            for (int64_t i = 0; i < span; ++i) {
                dst[i] = dsrc[i] * scale;
                dgamma += static_cast<double>(dsrc[i]) * (xsrc[i] - running_mean.data[c]) * inv;
                dbeta += dsrc[i];
            }
        }
        gamma.grad.data[c] += static_cast<float>(dgamma);
        beta.grad.data[c] += static_cast<float>(dbeta);
    }
    return dx;
}

Tensor ReLU::forward(const Tensor& x) {
    Tensor out(x.shape);
    mask_.assign(x.data.size(), 0);
    for (size_t i = 0; i < x.data.size(); ++i) {
        if (x.data[i] > 0.0f) {
            out.data[i] = x.data[i];
            mask_[i] = 1;
        }
    }
    return out;
}

Tensor ReLU::backward(const Tensor& dy) const {
    Tensor dx(dy.shape);
    for (size_t i = 0; i < dy.data.size(); ++i)
        if (mask_[i]) dx.data[i] = dy.data[i];
    return dx;
}

Tensor MaxPool2d::forward(const Tensor& x) {
    const int N = static_cast<int>(x.dim(0)), C = static_cast<int>(x.dim(1)),
              H = static_cast<int>(x.dim(2)), W = static_cast<int>(x.dim(3));
    const int Ho = conv_out_extent(H, kernel_, stride_, pad_);
    const int Wo = conv_out_extent(W, kernel_, stride_, pad_);
    in_shape_ = x.shape;
    Tensor out({N, C, Ho, Wo});
    argmax_.assign(out.data.size(), -1);
    size_t oi = 0;
    for (int n = 0; n < N; ++n) {
        for (int c = 0; c < C; ++c) {
            const float* plane = x.ptr() + (static_cast<size_t>(n) * C + c) * H * W;
            for (int y = 0; y < Ho; ++y) {
                for (int x2 = 0; x2 < Wo; ++x2, ++oi) {
                    float best = -std::numeric_limits<float>::infinity();
                    int64_t best_idx = -1;
                    for (int ki = 0; ki < kernel_; ++ki) {
                        const int sy = y * stride_ - pad_ + ki;
                        if (sy < 0 || sy >= H) continue;
                        for (int kj = 0; kj < kernel_; ++kj) {
                            const int sx = x2 * stride_ - pad_ + kj;
                            if (sx < 0 || sx >= W) continue;
                            const float v = plane[static_cast<size_t>(sy) * W + sx];
                            if (v > best) {
                                best = v;
                                best_idx = (static_cast<int64_t>(n) * C + c) * H * W +
                                           static_cast<int64_t>(sy) * W + sx;
                            }
                        }
                    }
                    out.data[oi] = best;
                    argmax_[oi] = best_idx;
                }
            }
        }
    }
    return out;
}

Tensor MaxPool2d::backward(const Tensor& dy) const {
    Tensor dx(in_shape_);
    for (size_t i = 0; i < dy.data.size(); ++i)
        if (argmax_[i] >= 0) dx.data[static_cast<size_t>(argmax_[i])] += dy.data[i];
    return dx;
}

BasicBlock::BasicBlock(const std::string& name, int in_ch, int out_ch, int stride)
    : conv1(name + ".conv1.weight", in_ch, out_ch, 3, stride, 1),
      conv2(name + ".conv2.weight", out_ch, out_ch, 3, 1, 1),
      bn1(name + ".bn1", out_ch),
      bn2(name + ".bn2", out_ch) {
    if (stride != 1 || in_ch != out_ch) {
        down_conv.emplace(name + ".downsample.conv.weight", in_ch, out_ch, 1, stride, 0);
        down_bn.emplace(name + ".downsample.bn", out_ch);
    }
}

Tensor BasicBlock::forward(const Tensor& x) {
    Tensor y = relu1.forward(bn1.forward(conv1.forward(x)));
    Tensor y2 = bn2.forward(conv2.forward(y));
    Tensor idn = down_conv ? down_bn->forward(down_conv->forward(x)) : x;
    for (size_t i = 0; i < y2.data.size(); ++i) y2.data[i] += idn.data[i];
    return relu2.forward(y2);
}

Tensor BasicBlock::backward(const Tensor& dy, bool need_input_grad) {
    Tensor dsum = relu2.backward(dy);
    Tensor d = conv2.backward(bn2.backward(dsum), true);
    Tensor dx_main = conv1.backward(bn1.backward(relu1.backward(d)), need_input_grad);
    if (!need_input_grad) {
        if (down_conv) down_conv->backward(down_bn->backward(dsum), false);
        return {};
    }
    if (down_conv) {
        Tensor dx_skip = down_conv->backward(down_bn->backward(dsum), true);
        for (size_t i = 0; i < dx_main.data.size(); ++i) dx_main.data[i] += dx_skip.data[i];
    } else {
        for (size_t i = 0; i < dx_main.data.size(); ++i) dx_main.data[i] += dsum.data[i];
    }
    return dx_main;
}

void BasicBlock::collect(std::vector<Param*>& out) {
    out.push_back(&conv1.weight);
    out.push_back(&bn1.gamma);
    out.push_back(&bn1.beta);
    out.push_back(&conv2.weight);
    out.push_back(&bn2.gamma);
    out.push_back(&bn2.beta);
    if (down_conv) {
        out.push_back(&down_conv->weight);
        out.push_back(&down_bn->gamma);
        out.push_back(&down_bn->beta);
    }
}

}  // namespace nn

int ResNetBackbone::stage_channels(int stage) {
    switch (stage) {
        case 1: return 64;
        case 2: return 128;
        case 3: return 256;
        case 4: return 512;
        default:
            throw ValidationError("truncation_layer must be in [1,4], got " +
                                  std::to_string(stage));
    }
}

ResNetBackbone::ResNetBackbone(const BackboneConfig& config)
    : config_(config),
      conv1_("conv1.weight", 3, 64, 7, 2, 3),
      bn1_("bn1", 64) {
    if (config_.architecture_id != "resnet18")
        throw ValidationError("unsupported architecture_id '" + config_.architecture_id +
                              "' (only resnet18 is built in)");
    stage_channels(config_.truncation_layer);  // range check

    // All four stages are always constructed so that the parameter layout
    // (and the reference init stream) is independent of the truncation point.
    int in_ch = 64;
    for (int stage = 1; stage <= kNumStages; ++stage) {
        const int out_ch = stage_channels(stage);
        const std::string base = "layer" + std::to_string(stage);
        blocks_.emplace_back(base + ".0", in_ch, out_ch, stage == 1 ? 1 : 2);
        blocks_.emplace_back(base + ".1", out_ch, out_ch, 1);
        in_ch = out_ch;
    }

    if (config_.weights_source == WeightsSource::kFile) {
        if (config_.weights_path.empty())
            throw InitError("weights_source=file requires weights_path");
        load_weights_file(config_.weights_path);
    } else {
        const char* env = std::getenv("SEDD_PRETRAINED_WEIGHTS");
        if (!config_.weights_path.empty()) {
            load_weights_file(config_.weights_path);
        } else if (env && *env) {
            load_weights_file(env);
        } else {
            init_reference_weights(config_.init_seed);
        }
    }
}

void ResNetBackbone::init_reference_weights(uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (Param* p : parameters()) {
        if (p->name.find("conv") != std::string::npos ||
            p->name.find("downsample") != std::string::npos) {
            // He-normal, fan_out mode.
            const auto& s = p->value.shape;
            const double fan_out = static_cast<double>(s[0] * s[2] * s[3]);
            std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_out));
            for (float& v : p->value.data) v = static_cast<float>(dist(rng));
        }
        // gamma/beta keep their constructor values (1, 0).
    }
}

void ResNetBackbone::load_weights_file(const std::filesystem::path& path) {
    Checkpoint ckpt = Checkpoint::load(path);
    for (auto& [name, tensor] : named_tensors()) {
        const Tensor* src = ckpt.find_tensor("backbone." + name);
        if (!src) src = ckpt.find_tensor(name);
        if (!src) throw InitError("weights file " + path.string() + " missing tensor " + name);
        if (src->shape != tensor->shape)
            throw InitError("weights file " + path.string() + ": tensor " + name +
                            " has shape " + src->shape_str() + ", expected " +
                            tensor->shape_str());
        tensor->data = src->data;
    }
}

std::vector<Param*> ResNetBackbone::parameters() {
    std::vector<Param*> out;
    out.push_back(&conv1_.weight);
    out.push_back(&bn1_.gamma);
    out.push_back(&bn1_.beta);
    for (auto& b : blocks_) b.collect(out);
    return out;
}

std::vector<std::pair<std::string, Tensor*>> ResNetBackbone::named_tensors() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (Param* p : parameters()) out.emplace_back(p->name, &p->value);
    auto add_bn_stats = [&out](nn::BatchNorm2d& bn) {
        const std::string base = bn.gamma.name.substr(0, bn.gamma.name.size() - 6);
        out.emplace_back(base + ".running_mean", &bn.running_mean);
        out.emplace_back(base + ".running_var", &bn.running_var);
    };
    add_bn_stats(bn1_);
    for (auto& b : blocks_) {
        add_bn_stats(b.bn1);
        add_bn_stats(b.bn2);
        if (b.down_bn) add_bn_stats(*b.down_bn);
    }
    return out;
}

void ResNetBackbone::zero_grad() {
    for (Param* p : parameters()) p->grad.zero();
}

Tensor ResNetBackbone::forward(const Tensor& batch) {
    if (batch.rank() != 4 || batch.dim(1) != 3)
        throw ValidationError("backbone expects (N,3,H,W) input, got " + batch.shape_str());
    Tensor x = maxpool_.forward(relu_.forward(bn1_.forward(conv1_.forward(batch))));
    cached_depth_ = 2 * config_.truncation_layer;
    for (int i = 0; i < cached_depth_; ++i) x = blocks_[i].forward(x);
    return x;
}

Tensor ResNetBackbone::forward_to_stage(const Tensor& batch, int stage) {
    stage_channels(stage);
    if (batch.rank() != 4 || batch.dim(1) != 3)
        throw ValidationError("backbone expects (N,3,H,W) input, got " + batch.shape_str());
    Tensor x = maxpool_.forward(relu_.forward(bn1_.forward(conv1_.forward(batch))));
    for (int i = 0; i < 2 * stage; ++i) x = blocks_[i].forward(x);
    return x;
}

void ResNetBackbone::backward(const Tensor& d_out) {
    if (config_.frozen) return;
    Tensor d = d_out;
    for (int i = cached_depth_ - 1; i >= 0; --i) d = blocks_[i].backward(d, true);
    d = bn1_.backward(relu_.backward(maxpool_.backward(d)));
    conv1_.backward(d, /*need_input_grad=*/false);
}

FeatureMap ResNetBackbone::extract(const Tensor& image) {
    if (image.rank() != 3 || image.dim(0) != 3)
        throw ValidationError("extract expects a (3,H,W) image, got " + image.shape_str());
    Tensor batch({1, image.dim(0), image.dim(1), image.dim(2)});
    batch.data = image.data;
    Tensor out = forward_to_stage(batch, config_.truncation_layer);
    FeatureMap fm({out.dim(1), out.dim(2), out.dim(3)});
    fm.data = std::move(out.data);
    if (!all_finite(fm)) throw NumericError("feature map contains non-finite values");
    return fm;
}

FeatureMap extract(const Tensor& image, const BackboneConfig& config) {
    ResNetBackbone backbone(config);
    return backbone.extract(image);
}

std::vector<std::filesystem::path> probe_layers(const std::vector<ImageRecord>& records,
                                                const std::vector<int>& layers,
                                                const BackboneConfig& config,
                                                const PreprocessSpec& preprocess,
                                                const std::filesystem::path& out_dir) {
    if (records.empty()) throw ValidationError("probe_layers: empty record sample");
    if (layers.empty()) throw ValidationError("probe_layers: no layers requested");
    {
        std::vector<std::string> ids;
        for (const auto& r : records)
            if (std::find(ids.begin(), ids.end(), r.dataset_id) == ids.end())
                ids.push_back(r.dataset_id);
        if (ids.size() < 2)
            std::cerr << "[sedd] warning: layer probe sample covers a single dataset; "
                         "cross-dataset comparisons will be empty\n";
    }

    BackboneConfig cfg = config;
    cfg.truncation_layer = ResNetBackbone::kNumStages;  // weights identical at any depth
    ResNetBackbone backbone(cfg);

    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;
    for (int layer : layers) {
        ResNetBackbone::stage_channels(layer);
        EmbeddingTable table;
        for (const auto& rec : records) {
            Tensor img = decode_and_preprocess(rec, preprocess);
            Tensor batch({1, img.dim(0), img.dim(1), img.dim(2)});
            batch.data = img.data;
            Tensor fm = backbone.forward_to_stage(batch, layer);
            StyleEmbedding row;
            row.data = Eigen::Map<const Eigen::VectorXf>(fm.ptr(), fm.numel()).cast<double>();
            row.path = rec.path;
            row.dataset_id = rec.dataset_id;
            row.weather = rec.weather;
            row.scene_id = rec.scene_id;
            row.split = rec.split;
            table.append(std::move(row));
        }
        auto path = out_dir / ("probe_layer" + std::to_string(layer) + ".tsv");
        save_embeddings(table, path);
        written.push_back(path);
    }
    return written;
}

}  // namespace sedd
