// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedd/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

#include "sedd/runconfig.hpp"

namespace sedd {

namespace {

uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b) {
    uint64_t h = seed ^ (a * 0x9e3779b97f4a7c15ull) ^ (b * 0xbf58476d1ce4e5b9ull);
    h ^= h >> 31;
    h *= 0x94d049bb133111ebull;
    h ^= h >> 29;
    return h;
}

// Deterministic class-balanced sampler: per epoch each class gets an
// independently shuffled index stream that wraps with a reshuffle.
class BalancedSampler {
public:
    BalancedSampler(std::vector<std::vector<const ImageRecord*>> per_class, int batch_size,
                    uint64_t seed)
        : per_class_(std::move(per_class)), batch_size_(batch_size), seed_(seed) {
        const int k = static_cast<int>(per_class_.size());
        quotas_.assign(k, batch_size / k);
        for (int j = 0; j < batch_size % k; ++j) ++quotas_[j];
    }

    void start_epoch(int epoch) {
        streams_.clear();
        cursors_.assign(per_class_.size(), 0);
        rngs_.resize(per_class_.size());
        for (size_t c = 0; c < per_class_.size(); ++c) {
            std::vector<size_t> idx(per_class_[c].size());
            std::iota(idx.begin(), idx.end(), 0);
            rngs_[c].seed(mix_seed(seed_, static_cast<uint64_t>(epoch) + 1, c + 1));
            std::shuffle(idx.begin(), idx.end(), rngs_[c]);
            streams_.push_back(std::move(idx));
        }
    }

    std::pair<std::vector<const ImageRecord*>, std::vector<int>> next_batch(
        const std::vector<int>& class_labels) {
        std::vector<const ImageRecord*> records;
        std::vector<int> labels;
        records.reserve(batch_size_);
        labels.reserve(batch_size_);
        for (size_t c = 0; c < per_class_.size(); ++c) {
            for (int q = 0; q < quotas_[c]; ++q) {
                if (cursors_[c] == streams_[c].size()) {
                    std::shuffle(streams_[c].begin(), streams_[c].end(), rngs_[c]);
                    cursors_[c] = 0;
                }
                records.push_back(per_class_[c][streams_[c][cursors_[c]++]]);
                labels.push_back(class_labels[c]);
            }
        }
        return {records, labels};
    }

private:
    std::vector<std::vector<const ImageRecord*>> per_class_;
    int batch_size_;
    uint64_t seed_;
    std::vector<int> quotas_;
    std::vector<std::vector<size_t>> streams_;
    std::vector<size_t> cursors_;
    std::vector<std::mt19937_64> rngs_;
};

// Momentum SGD with classic L2 weight decay for the float backbone
// parameters and the double head parameters. Centers are updated separately
// and never decayed.
class SgdOptimizer {
public:
    SgdOptimizer(ResNetBackbone& backbone, ProjectionHead& head, const TrainConfig& cfg)
        : backbone_(backbone), head_(head), cfg_(cfg) {
        for (Param* p : backbone_.parameters()) velocities_.emplace_back(p->value.shape);
        for (auto& layer : head_.layers()) {
            vel_w_.push_back(Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()));
            vel_b_.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
        }
    }

    void step(bool update_backbone) {
        if (update_backbone) {
            auto params = backbone_.parameters();
            for (size_t i = 0; i < params.size(); ++i) {
                Param* p = params[i];
                const float wd = p->weight_decay ? static_cast<float>(cfg_.weight_decay) : 0.0f;
                const float mom = static_cast<float>(cfg_.momentum);
                const float lr = static_cast<float>(cfg_.learning_rate);
                float* v = velocities_[i].ptr();
                float* w = p->value.ptr();
                const float* g = p->grad.ptr();
                for (int64_t k = 0; k < p->value.numel(); ++k) {
                    v[k] = mom * v[k] + g[k] + wd * w[k];
                    w[k] -= lr * v[k];
                }
            }
        }
        auto& layers = head_.layers();
        for (size_t l = 0; l < layers.size(); ++l) {
            vel_w_[l] = cfg_.momentum * vel_w_[l] + layers[l].grad_weight +
                        cfg_.weight_decay * layers[l].weight;
            layers[l].weight -= cfg_.learning_rate * vel_w_[l];
            vel_b_[l] = cfg_.momentum * vel_b_[l] + layers[l].grad_bias +
                        cfg_.weight_decay * layers[l].bias;
            layers[l].bias -= cfg_.learning_rate * vel_b_[l];
        }
    }

private:
    ResNetBackbone& backbone_;
    ProjectionHead& head_;
    TrainConfig cfg_;
    std::vector<Tensor> velocities_;
    std::vector<Eigen::MatrixXd> vel_w_;
    std::vector<Eigen::VectorXd> vel_b_;
};

void write_divergence_snapshot(const std::filesystem::path& out_dir,
                               const TrainLogRow& row) {
    nlohmann::json j{{"epoch", row.epoch},
                     {"iteration", row.iteration},
                     {"ntxent", row.ntxent},
                     {"center", row.center},
                     {"total", row.total},
                     {"eta_c", row.eta_c},
                     {"skipped_anchors", row.skipped_anchors}};
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    std::ofstream out(out_dir / "divergence_snapshot.json");
    out << j.dump(2) << "\n";
}

}  // namespace

InMemoryTrainResult train_in_memory(const std::vector<DatasetManifest>& manifests,
                                    const TrainConfig& config,
                                    const StylePipelineConfig& pipeline_config,
                                    const LabelRegistry& registry,
                                    const std::string& config_hash,
                                    std::vector<TrainLogRow>* live_log) {
    config.validate();
    bool has_real = false, has_synth = false;
    for (const auto& m : manifests) {
        has_real |= m.realism == Realism::kReal;
        has_synth |= m.realism == Realism::kSynthetic;
    }
    if (!has_real || !has_synth)
        throw ValidationError(
            "training requires at least one real and one synthetic manifest");

    // class label -> training records, labels in ascending order
    std::map<int, std::vector<const ImageRecord*>> by_class;
    for (const auto& m : manifests) {
        const int label = registry.label_of(m.dataset_id);
        for (const auto* rec : records_in_split(m, Split::kTrain))
            by_class[label].push_back(rec);
    }
    size_t total_train = 0;
    for (const auto& [label, recs] : by_class) {
        if (recs.empty())
            throw ValidationError("class label " + std::to_string(label) +
                                  " has an empty train split");
        total_train += recs.size();
    }
    if (by_class.size() < 2)
        throw ValidationError("training needs at least two classes");

    std::vector<int> class_labels;
    std::vector<std::vector<const ImageRecord*>> per_class;
    for (auto& [label, recs] : by_class) {
        class_labels.push_back(label);
        per_class.push_back(recs);
    }

    auto model = std::unique_ptr<ModelState>(
        new ModelState(pipeline_config, config, registry, config_hash));
    StylePipeline& pipeline = model->pipeline();
    ClassCenters& centers = model->centers();
    for (int label : class_labels)
        centers.centers[label] = Eigen::VectorXd::Zero(pipeline_config.embedding_dim);
    centers.center_lr = config.center_lr_init;

    BalancedSampler sampler(per_class, config.batch_size, config.seed);
    SgdOptimizer optimizer(pipeline.backbone(), pipeline.head(), config);
    EmbeddingMemory memory(config.memory_capacity);

    const int iters_per_epoch =
        static_cast<int>((total_train + config.batch_size - 1) / config.batch_size);
    InMemoryTrainResult result;
    int iteration = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        sampler.start_epoch(epoch);
        const double eta_c = decay_center_lr(epoch, config);
        for (int it = 0; it < iters_per_epoch; ++it, ++iteration) {
            auto [recs, labels] = sampler.next_batch(class_labels);
            const int batch = static_cast<int>(recs.size());

            Tensor images({batch, 3, pipeline_config.preprocess.target_height,
                           pipeline_config.preprocess.target_width});
            const int64_t per = images.numel() / batch;
            for (int b = 0; b < batch; ++b) {
                Tensor img = decode_and_preprocess(*recs[b], pipeline_config.preprocess);
                std::copy_n(img.ptr(), per, images.ptr() + static_cast<size_t>(b) * per);
            }

            Eigen::MatrixXd z = pipeline.forward_batch(images);

            // Detached copies enter the ring before mining; the pool below
            // re-uses the live batch columns instead of those copies.
            const size_t pre_push = memory.size();
            for (int b = 0; b < batch; ++b) memory.push(z.col(b), labels[b]);
            const size_t old_entries = memory.size() - batch;

            Eigen::MatrixXd pool(z.rows(), batch + static_cast<int>(old_entries));
            std::vector<int> pool_labels(labels);
            pool.leftCols(batch) = z;
            pool_labels.resize(batch + old_entries);
            for (size_t e = 0; e < old_entries; ++e) {
                pool.col(batch + static_cast<int>(e)) = memory.entries()[e].first;
                pool_labels[batch + e] = memory.entries()[e].second;
            }

            MinedPairs mined = batch_hard_mine(pool, pool_labels, batch);

            Eigen::MatrixXd d_pool;
            const double l_ntxent =
                mined.anchors.empty()
                    ? 0.0
                    : ntxent_loss_grad(pool, mined.anchors, mined.positives, config.tau,
                                       &d_pool);
            const double l_center =
                center_loss(z, labels, centers, config.center_loss_squared);
            const double l_total = total_loss(l_ntxent, l_center, config.lambda);

            TrainLogRow row{epoch, iteration, l_ntxent, l_center, l_total, eta_c,
                            mined.skipped};
            result.log.push_back(row);
            if (live_log) live_log->push_back(row);

            if (!std::isfinite(l_total))
                throw NumericError("training diverged at iteration " +
                                   std::to_string(iteration) + " (non-finite loss)");

            Eigen::MatrixXd d_z = mined.anchors.empty()
                                      ? Eigen::MatrixXd::Zero(z.rows(), batch)
                                      : Eigen::MatrixXd(d_pool.leftCols(batch));
            if (config.lambda > 0.0)
                d_z += config.lambda * center_loss_grad_embeddings(
                                           z, labels, centers, config.center_loss_squared);

            pipeline.zero_grad();
            pipeline.backward_batch(d_z);
            optimizer.step(!pipeline_config.backbone.frozen);

            update_centers(z, labels, centers, eta_c, config.center_update,
                           config.center_loss_squared);
        }
    }

    result.model = std::move(model);
    return result;
}

TrainResult train(const std::vector<DatasetManifest>& manifests, const TrainConfig& config,
                  const StylePipelineConfig& pipeline_config, const LabelRegistry& registry,
                  const std::filesystem::path& out_dir, const std::string& config_hash) {
    std::filesystem::create_directories(out_dir);

    TrainResult result;
    InMemoryTrainResult mem;
    try {
        mem = train_in_memory(manifests, config, pipeline_config, registry, config_hash,
                              &result.log);
    } catch (const NumericError&) {
        if (!result.log.empty()) write_divergence_snapshot(out_dir, result.log.back());
        throw;
    }

    result.log_path = out_dir / "training_log.csv";
    {
        std::ofstream log(result.log_path);
        log << "iteration,epoch,ntxent_loss,center_loss,total_loss,eta_c,skipped_anchors\n";
        char buf[160];
        for (const auto& r : result.log) {
            std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g,%.17g,%d\n",
                          r.iteration, r.epoch, r.ntxent, r.center, r.total, r.eta_c,
                          r.skipped_anchors);
            log << buf;
        }
    }

    result.checkpoint_path = out_dir / "model.ckpt";
    mem.model->save(result.checkpoint_path);

    // Real-class train-split embeddings become the profiling reference.
    std::vector<ImageRecord> real_train;
    for (const auto& m : manifests)
        if (m.realism == Realism::kReal)
            for (const auto* rec : records_in_split(m, Split::kTrain))
                real_train.push_back(*rec);
    EmbeddingTable reference =
        mem.model->pipeline().embed_records(real_train, registry);
    result.reference_path = out_dir / "reference_embeddings.tsv";
    save_embeddings(reference, result.reference_path);

    return result;
}

}  // namespace sedd
