// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedd/sedd_metrics.hpp"

#include <cmath>
#include <fstream>

#include "sedd/model_state.hpp"

namespace sedd {

void KernelParams::validate() const {
    if (!(bandwidth > 0.0)) throw ValidationError("kernel bandwidth sigma must be positive");
}

nlohmann::json SEDDReport::to_json() const {
    nlohmann::json j{{"format_version", 1},
                     {"dataset_id", dataset_id},
                     {"reference_id", reference_id},
                     {"sedd1", sedd1},
                     {"m", m},
                     {"n", n},
                     {"config_hash", config_hash}};
    j["sedd2"] = sedd2 ? nlohmann::json(*sedd2) : nlohmann::json(nullptr);
    j["intra_class_variance"] =
        intra_class_variance ? nlohmann::json(*intra_class_variance) : nlohmann::json(nullptr);
    return j;
}

SEDDReport SEDDReport::from_json(const nlohmann::json& j) {
    SEDDReport r;
    r.dataset_id = j.value("dataset_id", std::string{});
    r.reference_id = j.value("reference_id", std::string{});
    r.sedd1 = j.value("sedd1", 0.0);
    if (j.contains("sedd2") && !j["sedd2"].is_null()) r.sedd2 = j["sedd2"].get<double>();
    r.m = j.value("m", 0);
    r.n = j.value("n", 0);
    if (j.contains("intra_class_variance") && !j["intra_class_variance"].is_null())
        r.intra_class_variance = j["intra_class_variance"].get<double>();
    r.config_hash = j.value("config_hash", std::string{});
    return r;
}

void SEDDReport::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write report: " + path.string());
    out << to_json().dump(2) << "\n";
}

SEDDReport SEDDReport::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("report file not found: " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("report file " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

StyleCenter style_center(const Eigen::MatrixXd& embeddings, std::string dataset_id) {
    if (embeddings.cols() == 0)
        throw ValidationError("style_center requires a non-empty embedding list");
    StyleCenter c;
    c.dataset_id = std::move(dataset_id);
    c.vector = embeddings.rowwise().mean();
    c.sample_count = static_cast<int>(embeddings.cols());
    return c;
}

StyleCenter style_center(const EmbeddingTable& table) {
    if (table.rows.empty())
        throw ValidationError("style_center requires a non-empty embedding list");
    std::string id;
    for (const auto& d : table.dataset_ids()) {
        if (!id.empty()) id += "+";
        id += d;
    }
    return style_center(embeddings_as_matrix(table), id);
}

double sedd1(const Eigen::VectorXd& c_new, const Eigen::VectorXd& c_real) {
    if (c_new.size() != c_real.size())
        throw ValidationError("sedd1: center dimensionality mismatch (" +
                              std::to_string(c_new.size()) + " vs " +
                              std::to_string(c_real.size()) + ")");
    return (c_new - c_real).norm();
}

double sedd1(const StyleCenter& c_new, const StyleCenter& c_real) {
    return sedd1(c_new.vector, c_real.vector);
}

double gaussian_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double sigma) {
    if (!(sigma > 0.0)) throw ValidationError("gaussian_kernel: sigma must be positive");
    if (x.size() != y.size())
        throw ValidationError("gaussian_kernel: dimensionality mismatch");
    return std::exp(-(x - y).squaredNorm() / (2.0 * sigma * sigma));
}

double sedd2(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double sigma) {
    if (!(sigma > 0.0)) throw ValidationError("sedd2: sigma must be positive");
    const int m = static_cast<int>(x.cols());
    const int n = static_cast<int>(y.cols());
    if (m < 2 || n < 2)
        throw ValidationError("sedd2 requires at least two samples per side (got m=" +
                              std::to_string(m) + ", n=" + std::to_string(n) + ")");
    if (x.rows() != y.rows()) throw ValidationError("sedd2: dimensionality mismatch");
    const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);

    double xx = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            xx += std::exp(-(x.col(i) - x.col(j)).squaredNorm() * inv_two_sigma_sq);
    double yy = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            yy += std::exp(-(y.col(i) - y.col(j)).squaredNorm() * inv_two_sigma_sq);
    double xy = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            xy += std::exp(-(x.col(i) - y.col(j)).squaredNorm() * inv_two_sigma_sq);

    return 2.0 * xx / (static_cast<double>(m) * (m - 1)) +
           2.0 * yy / (static_cast<double>(n) * (n - 1)) -
           2.0 * xy / (static_cast<double>(m) * n);
}

double intra_class_variance(const Eigen::MatrixXd& embeddings) {
    const int m = static_cast<int>(embeddings.cols());
    if (m < 2) throw ValidationError("intra_class_variance requires at least two embeddings");
    const Eigen::VectorXd center = embeddings.rowwise().mean();
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += (embeddings.col(i) - center).squaredNorm();
    return acc / m;
}

Eigen::MatrixXd embeddings_as_matrix(const EmbeddingTable& table) {
    Eigen::MatrixXd m(table.dim, static_cast<int>(table.rows.size()));
    for (size_t i = 0; i < table.rows.size(); ++i) m.col(static_cast<int>(i)) = table.rows[i].data;
    return m;
}

RealReference RealReference::from_table(const EmbeddingTable& table) {
    RealReference ref;
    ref.embeddings = table;
    ref.center = style_center(table);
    ref.reference_id = ref.center.dataset_id;
    return ref;
}

RealReference load_reference(const std::filesystem::path& path) {
    std::ifstream probe(path);
    if (!probe) throw ConfigError("reference file not found: " + path.string());
    std::string first_line;
    std::getline(probe, first_line);
    probe.close();

    if (first_line.rfind("# sedd-embeddings", 0) == 0)
        return RealReference::from_table(load_embeddings(path));

    // compact mode: JSON with the style center only
    std::ifstream in(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("reference file " + path.string() +
                         " is neither an embedding table nor reference stats: " + e.what());
    }
    if (!j.contains("center")) throw ParseError("reference stats missing 'center' field");
    RealReference ref;
    ref.compact = true;
    const auto vec = j["center"].get<std::vector<double>>();
    ref.center.vector = Eigen::Map<const Eigen::VectorXd>(vec.data(), vec.size());
    ref.center.sample_count = j.value("sample_count", 0);
    ref.center.dataset_id = j.value("dataset_id", std::string{});
    ref.reference_id = ref.center.dataset_id;
    return ref;
}

void save_reference_stats(const StyleCenter& center, const std::filesystem::path& path) {
    nlohmann::json j{{"format_version", 1},
                     {"dataset_id", center.dataset_id},
                     {"sample_count", center.sample_count},
                     {"center", std::vector<double>(center.vector.data(),
                                                    center.vector.data() + center.vector.size())}};
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write reference stats: " + path.string());
    out << j.dump(2) << "\n";
}

SEDDReport profile_dataset(const DatasetManifest& manifest, const RealReference& reference,
                           ModelState& model, const KernelParams& kernel, Split eval_split) {
    kernel.validate();
    std::vector<ImageRecord> records;
    for (const auto& rec : manifest.records)
        if (eval_split == Split::kUnassigned || rec.split == eval_split)
            records.push_back(rec);
    if (records.size() < 2)
        throw ValidationError("profile_dataset: dataset '" + manifest.dataset_id +
                              "' has fewer than 2 records in the evaluated split");
    if (reference.center.sample_count < 2 ||
        (!reference.compact && reference.embeddings.rows.size() < 2))
        throw ValidationError("profile_dataset: reference has fewer than 2 samples");

    LabelRegistry registry = model.registry();
    if (!registry.contains(manifest.dataset_id))
        registry.assign(manifest.dataset_id, manifest.realism);
    EmbeddingTable table = model.pipeline().embed_records(records, registry);
    const Eigen::MatrixXd emb = embeddings_as_matrix(table);

    SEDDReport report;
    report.dataset_id = manifest.dataset_id;
    report.reference_id = reference.reference_id;
    report.m = static_cast<int>(emb.cols());
    report.n = reference.compact ? reference.center.sample_count
                                 : static_cast<int>(reference.embeddings.rows.size());
    report.sedd1 = sedd1(style_center(emb, manifest.dataset_id).vector,
                         reference.center.vector);
    if (!reference.compact)
        report.sedd2 = sedd2(emb, embeddings_as_matrix(reference.embeddings),
                             kernel.bandwidth);
    if (emb.cols() >= 2) report.intra_class_variance = intra_class_variance(emb);
    report.config_hash = model.config_hash();
    return report;
}

SEDDReport profile_dataset(const DatasetManifest& manifest, const RealReference& reference,
                           const std::filesystem::path& checkpoint_path,
                           const KernelParams& kernel, Split eval_split) {
    ModelState model = ModelState::load(checkpoint_path);
    return profile_dataset(manifest, reference, model, kernel, eval_split);
}

}  // namespace sedd
