// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedd/model_state.hpp"

#include "sedd/runconfig.hpp"

namespace sedd {

ModelState::ModelState(StylePipelineConfig pipeline_cfg, TrainConfig train_cfg,
                       LabelRegistry registry, std::string config_hash)
    : pipeline_cfg_(std::move(pipeline_cfg)),
      train_cfg_(train_cfg),
      registry_(std::move(registry)),
      config_hash_(std::move(config_hash)) {
    pipeline_ = std::make_unique<StylePipeline>(pipeline_cfg_);
}

void ModelState::save(const std::filesystem::path& path) {
    Checkpoint ckpt;
    ckpt.meta["pipeline_config"] = to_json(pipeline_cfg_);
    ckpt.meta["train_config"] = to_json(train_cfg_);
    ckpt.meta["config_hash"] = config_hash_;
    ckpt.meta["seed"] = train_cfg_.seed;
    nlohmann::json label_map = nlohmann::json::array();
    for (const auto& [id, label] : registry_.entries())
        label_map.push_back({{"dataset_id", id}, {"class_label", label}});
    ckpt.meta["label_map"] = label_map;

    for (auto& [name, tensor] : pipeline_->backbone().named_tensors())
        ckpt.add_tensor("backbone." + name, *tensor);

    const auto& layers = pipeline_->head().layers();
    for (size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        Tensor w({layer.weight.rows(), layer.weight.cols()});
        for (int64_t r = 0; r < layer.weight.rows(); ++r)
            for (int64_t c = 0; c < layer.weight.cols(); ++c)
                w.data[static_cast<size_t>(r) * layer.weight.cols() + c] =
                    static_cast<float>(layer.weight(r, c));
        Tensor b({layer.bias.size()});
        for (int64_t i = 0; i < layer.bias.size(); ++i)
            b.data[static_cast<size_t>(i)] = static_cast<float>(layer.bias(i));
        ckpt.add_tensor("head.layer" + std::to_string(l) + ".weight", w);
        ckpt.add_tensor("head.layer" + std::to_string(l) + ".bias", b);
    }

    nlohmann::json center_labels = nlohmann::json::array();
    Tensor centers_tensor({static_cast<int64_t>(centers_.centers.size()),
                           static_cast<int64_t>(pipeline_cfg_.embedding_dim)});
    int64_t row = 0;
    for (const auto& [label, center] : centers_.centers) {
        center_labels.push_back(label);
        for (int64_t i = 0; i < center.size(); ++i)
            centers_tensor.data[static_cast<size_t>(row) * pipeline_cfg_.embedding_dim + i] =
                static_cast<float>(center[i]);
        ++row;
    }
    ckpt.meta["center_labels"] = center_labels;
    ckpt.meta["center_lr"] = centers_.center_lr;
    ckpt.add_tensor("centers", centers_tensor);

    ckpt.save(path);
}

ModelState ModelState::load(const std::filesystem::path& path) {
    Checkpoint ckpt = Checkpoint::load(path);
    if (!ckpt.meta.contains("pipeline_config"))
        throw InitError("checkpoint missing pipeline_config metadata: " + path.string());

    ModelState state;
    state.pipeline_cfg_ = pipeline_from_json(ckpt.meta["pipeline_config"]);
    state.train_cfg_ = train_from_json(ckpt.meta.value("train_config", nlohmann::json::object()));
    state.config_hash_ = ckpt.meta.value("config_hash", std::string{});

    std::vector<std::pair<std::string, int>> entries;
    for (const auto& e : ckpt.meta.value("label_map", nlohmann::json::array()))
        entries.emplace_back(e["dataset_id"].get<std::string>(), e["class_label"].get<int>());
    state.registry_ = LabelRegistry::from_entries(entries);

    // Build the pipeline with a cheap local init, then overwrite every tensor
    // from the checkpoint.
    StylePipelineConfig build_cfg = state.pipeline_cfg_;
    build_cfg.backbone.weights_source = WeightsSource::kPretrainedClassification;
    build_cfg.backbone.weights_path.clear();
    state.pipeline_ = std::make_unique<StylePipeline>(build_cfg);

    for (auto& [name, tensor] : state.pipeline_->backbone().named_tensors()) {
        const Tensor* src = ckpt.find_tensor("backbone." + name);
        if (!src) throw InitError("checkpoint missing tensor backbone." + name);
        if (src->shape != tensor->shape)
            throw InitError("checkpoint tensor backbone." + name + " has shape " +
                            src->shape_str() + ", expected " + tensor->shape_str());
        tensor->data = src->data;
    }

    auto& layers = state.pipeline_->head().layers();
    for (size_t l = 0; l < layers.size(); ++l) {
        const Tensor* w = ckpt.find_tensor("head.layer" + std::to_string(l) + ".weight");
        const Tensor* b = ckpt.find_tensor("head.layer" + std::to_string(l) + ".bias");
        if (!w || !b) throw InitError("checkpoint missing head layer " + std::to_string(l));
        if (w->dim(0) != layers[l].weight.rows() || w->dim(1) != layers[l].weight.cols())
            throw InitError("checkpoint head layer " + std::to_string(l) + " shape mismatch");
        for (int64_t r = 0; r < layers[l].weight.rows(); ++r)
            for (int64_t c = 0; c < layers[l].weight.cols(); ++c)
                layers[l].weight(r, c) =
                    w->data[static_cast<size_t>(r) * layers[l].weight.cols() + c];
        for (int64_t i = 0; i < layers[l].bias.size(); ++i)
            layers[l].bias(i) = b->data[static_cast<size_t>(i)];
    }

    const Tensor* centers = ckpt.find_tensor("centers");
    if (centers) {
        const auto labels = ckpt.meta.value("center_labels", nlohmann::json::array());
        const int64_t dim = centers->dim(1);
        for (size_t row = 0; row < labels.size(); ++row) {
            Eigen::VectorXd c(dim);
            for (int64_t i = 0; i < dim; ++i)
                c[i] = centers->data[row * static_cast<size_t>(dim) + i];
            state.centers_.centers[labels[row].get<int>()] = c;
        }
        state.centers_.center_lr = ckpt.meta.value("center_lr", 10.0);
    }
    return state;
}

}  // namespace sedd
