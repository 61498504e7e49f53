// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sedd/embedding.hpp"
#include "sedd/manifest.hpp"

namespace sedd {

struct StyleCenter {
    std::string dataset_id;
    Eigen::VectorXd vector;  // arithmetic mean of the contributing embeddings
    int sample_count = 0;
};

struct KernelParams {
    double bandwidth = 10.0;  // sigma of the Gaussian kernel

    void validate() const;
};

struct SEDDReport {
    std::string dataset_id;
    std::string reference_id;
    double sedd1 = 0.0;
    std::optional<double> sedd2;  // absent when only center stats are available
    int m = 0;                    // profiled-dataset sample count
    int n = 0;                    // reference sample count
    std::optional<double> intra_class_variance;
    std::string config_hash;

    nlohmann::json to_json() const;
    static SEDDReport from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static SEDDReport load(const std::filesystem::path& path);
};

// Componentwise mean of the columns.
StyleCenter style_center(const Eigen::MatrixXd& embeddings, std::string dataset_id = {});
StyleCenter style_center(const EmbeddingTable& table);

// Euclidean distance between two style centers.
double sedd1(const StyleCenter& c_new, const StyleCenter& c_real);
double sedd1(const Eigen::VectorXd& c_new, const Eigen::VectorXd& c_real);

// exp(-|x-y|^2 / (2 sigma^2)), in (0, 1].
double gaussian_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double sigma);

// Squared-MMD estimator with U-statistic within-sample terms and the full
// m*n cross term (diagonal included). May be slightly negative for samples
// from one distribution; reported raw.
double sedd2(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double sigma);

// Mean squared Euclidean distance to the sample's own style center (trace of
// the biased sample covariance).
double intra_class_variance(const Eigen::MatrixXd& embeddings);

Eigen::MatrixXd embeddings_as_matrix(const EmbeddingTable& table);

// Real-dataset reference: either the full embedding sample or, in compact
// mode, just its style center (sedd2 then stays unreported).
struct RealReference {
    bool compact = false;
    EmbeddingTable embeddings;  // full mode
    StyleCenter center;         // always populated
    std::string reference_id;

    static RealReference from_table(const EmbeddingTable& table);
};

RealReference load_reference(const std::filesystem::path& path);
void save_reference_stats(const StyleCenter& center, const std::filesystem::path& path);

class ModelState;  // defined in model_state.hpp

// Embeds the manifest's records (restricted to eval_split unless kUnassigned,
// which profiles every record) and scores them against the real reference.
SEDDReport profile_dataset(const DatasetManifest& manifest, const RealReference& reference,
                           ModelState& model, const KernelParams& kernel,
                           Split eval_split = Split::kUnassigned);

SEDDReport profile_dataset(const DatasetManifest& manifest, const RealReference& reference,
                           const std::filesystem::path& checkpoint_path,
                           const KernelParams& kernel,
                           Split eval_split = Split::kUnassigned);

}  // namespace sedd
