// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedd/runconfig.hpp"

#include <fstream>

namespace sedd {

using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j[key].is_null()) return fallback;
    try {
        return j[key].get<T>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("config field '") + key + "': " + e.what());
    }
}

}  // namespace

json to_json(const PreprocessSpec& s) {
    return json{{"target_height", s.target_height},
                {"target_width", s.target_width},
                {"resize_shorter", s.resize_shorter},
                {"channel_means", s.channel_means},
                {"channel_stds", s.channel_stds},
                {"resize_policy", to_string(s.resize_policy)}};
}

PreprocessSpec preprocess_from_json(const json& j) {
    PreprocessSpec s;
    s.target_height = get_or(j, "target_height", s.target_height);
    s.target_width = get_or(j, "target_width", s.target_width);
    s.resize_shorter = get_or(j, "resize_shorter", s.resize_shorter);
    s.channel_means = get_or(j, "channel_means", s.channel_means);
    s.channel_stds = get_or(j, "channel_stds", s.channel_stds);
    if (j.contains("resize_policy"))
        s.resize_policy = resize_policy_from_string(j["resize_policy"].get<std::string>());
    s.validate();
    return s;
}

json to_json(const BackboneConfig& c) {
    return json{{"architecture_id", c.architecture_id},
                {"truncation_layer", c.truncation_layer},
                {"weights_source", to_string(c.weights_source)},
                {"weights_path", c.weights_path},
                {"frozen", c.frozen},
                {"init_seed", c.init_seed}};
}

BackboneConfig backbone_from_json(const json& j) {
    BackboneConfig c;
    c.architecture_id = get_or<std::string>(j, "architecture_id", c.architecture_id);
    c.truncation_layer = get_or(j, "truncation_layer", c.truncation_layer);
    if (j.contains("weights_source"))
        c.weights_source = weights_source_from_string(j["weights_source"].get<std::string>());
    c.weights_path = get_or<std::string>(j, "weights_path", c.weights_path);
    c.frozen = get_or(j, "frozen", c.frozen);
    c.init_seed = get_or(j, "init_seed", c.init_seed);
    return c;
}

json to_json(const TrainConfig& c) {
    return json{{"learning_rate", c.learning_rate},
                {"epochs", c.epochs},
                {"lambda", c.lambda},
                {"tau", c.tau},
                {"momentum", c.momentum},
                {"weight_decay", c.weight_decay},
                {"center_lr_init", c.center_lr_init},
                {"center_decay", c.center_decay},
                {"batch_size", c.batch_size},
                {"seed", c.seed},
                {"memory_capacity", c.memory_capacity},
                {"center_loss_squared", c.center_loss_squared},
                {"center_update",
                 c.center_update == CenterUpdateRule::kGradient ? "gradient" : "mean_shift"}};
}

TrainConfig train_from_json(const json& j) {
    TrainConfig c;
    c.learning_rate = get_or(j, "learning_rate", c.learning_rate);
    c.epochs = get_or(j, "epochs", c.epochs);
    c.lambda = get_or(j, "lambda", c.lambda);
    c.tau = get_or(j, "tau", c.tau);
    c.momentum = get_or(j, "momentum", c.momentum);
    c.weight_decay = get_or(j, "weight_decay", c.weight_decay);
    c.center_lr_init = get_or(j, "center_lr_init", c.center_lr_init);
    c.center_decay = get_or(j, "center_decay", c.center_decay);
    c.batch_size = get_or(j, "batch_size", c.batch_size);
    c.seed = get_or(j, "seed", c.seed);
    c.memory_capacity = get_or(j, "memory_capacity", c.memory_capacity);
    c.center_loss_squared = get_or(j, "center_loss_squared", c.center_loss_squared);
    const std::string rule = get_or<std::string>(j, "center_update", "gradient");
    if (rule == "gradient")
        c.center_update = CenterUpdateRule::kGradient;
    else if (rule == "mean_shift")
        c.center_update = CenterUpdateRule::kMeanShift;
    else
        throw ParseError("unknown center_update rule '" + rule + "'");
    c.validate();
    return c;
}

json to_json(const KernelParams& p) {
    return json{{"bandwidth", p.bandwidth}};
}

KernelParams kernel_from_json(const json& j) {
    KernelParams p;
    p.bandwidth = get_or(j, "bandwidth", p.bandwidth);
    p.validate();
    return p;
}

json to_json(const StylePipelineConfig& c) {
    return json{{"backbone", to_json(c.backbone)},
                {"preprocess", to_json(c.preprocess)},
                {"head_hidden", c.head_hidden},
                {"embedding_dim", c.embedding_dim},
                {"head_init_seed", c.head_init_seed},
                {"gram_normalize", c.gram_normalize},
                {"batch_size", c.batch_size}};
}

StylePipelineConfig pipeline_from_json(const json& j) {
    StylePipelineConfig c;
    if (j.contains("backbone")) c.backbone = backbone_from_json(j["backbone"]);
    if (j.contains("preprocess")) c.preprocess = preprocess_from_json(j["preprocess"]);
    c.head_hidden = get_or(j, "head_hidden", c.head_hidden);
    c.embedding_dim = get_or(j, "embedding_dim", c.embedding_dim);
    c.head_init_seed = get_or(j, "head_init_seed", c.head_init_seed);
    c.gram_normalize = get_or(j, "gram_normalize", c.gram_normalize);
    c.batch_size = get_or(j, "batch_size", c.batch_size);
    return c;
}

StylePipelineConfig RunConfig::pipeline_config() const {
    StylePipelineConfig c;
    c.backbone = backbone;
    c.preprocess = preprocess;
    c.head_hidden = head_hidden;
    c.embedding_dim = embedding_dim;
    c.gram_normalize = gram_normalize;
    c.batch_size = train.batch_size;
    c.head_init_seed = seed + 1;  // distinct stream from the sampler
    return c;
}

json to_json(const RunConfig& c) {
    return json{{"manifests", c.manifests},
                {"preprocess", to_json(c.preprocess)},
                {"backbone", to_json(c.backbone)},
                {"train", to_json(c.train)},
                {"kernel", to_json(c.kernel)},
                {"split_ratios", {c.split_ratios.train, c.split_ratios.val, c.split_ratios.test}},
                {"head_hidden", c.head_hidden},
                {"embedding_dim", c.embedding_dim},
                {"gram_normalize", c.gram_normalize},
                {"seed", c.seed},
                {"out_dir", c.out_dir},
                {"deterministic", c.deterministic},
                {"checkpoint", c.checkpoint},
                {"eval_split", c.eval_split},
                {"sweep_target", c.sweep_target}};
}

RunConfig runconfig_from_json(const json& j) {
    RunConfig c;
    c.manifests = get_or(j, "manifests", c.manifests);
    if (j.contains("preprocess")) c.preprocess = preprocess_from_json(j["preprocess"]);
    if (j.contains("backbone")) c.backbone = backbone_from_json(j["backbone"]);
    if (j.contains("train")) c.train = train_from_json(j["train"]);
    if (j.contains("kernel")) c.kernel = kernel_from_json(j["kernel"]);
    if (j.contains("split_ratios")) {
        const auto r = j["split_ratios"].get<std::vector<double>>();
        if (r.size() != 3) throw ParseError("split_ratios must have three entries");
        c.split_ratios = {r[0], r[1], r[2]};
    }
    c.head_hidden = get_or(j, "head_hidden", c.head_hidden);
    c.embedding_dim = get_or(j, "embedding_dim", c.embedding_dim);
    c.gram_normalize = get_or(j, "gram_normalize", c.gram_normalize);
    c.seed = get_or(j, "seed", c.seed);
    c.out_dir = get_or(j, "out_dir", c.out_dir);
    c.deterministic = get_or(j, "deterministic", c.deterministic);
    c.checkpoint = get_or(j, "checkpoint", c.checkpoint);
    c.eval_split = get_or(j, "eval_split", c.eval_split);
    c.sweep_target = get_or(j, "sweep_target", c.sweep_target);
    // the seed also seeds training unless the train block pins its own
    if (!j.contains("train") || !j["train"].contains("seed")) c.train.seed = c.seed;
    return c;
}

RunConfig load_runconfig(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file not found: " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("config file " + path.string() + ": " + e.what());
    }
    return runconfig_from_json(j);
}

std::string RunConfig::config_hash() const {
    return fnv1a_hex(to_json(*this).dump());
}

std::string fnv1a_hex(const std::string& payload) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : payload) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace sedd
