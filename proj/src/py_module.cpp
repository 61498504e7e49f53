// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0
//
// Python bindings for the core profiling operations. Sample matrices follow
// the numpy convention (rows = samples); the C++ core is column-major.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sedd/bench.hpp"
#include "sedd/model_state.hpp"
#include "sedd/runconfig.hpp"
#include "sedd/toycorpus.hpp"
#include "sedd/tsne.hpp"
#include "sedd/viz.hpp"

namespace py = pybind11;
using namespace sedd;

namespace {

FeatureMap feature_from_array(const py::array_t<float, py::array::c_style>& arr) {
    if (arr.ndim() != 3) throw ValidationError("feature map must be a (C,H,W) array");
    FeatureMap fm({arr.shape(0), arr.shape(1), arr.shape(2)});
    std::copy_n(arr.data(), fm.numel(), fm.ptr());
    return fm;
}

GramMatrix gram_from_array(const py::array_t<float, py::array::c_style>& arr) {
    if (arr.ndim() != 2 || arr.shape(0) != arr.shape(1))
        throw ValidationError("gram matrix must be square");
    const int c = static_cast<int>(arr.shape(0));
    GramMatrix g(c, c);
    for (int i = 0; i < c; ++i)
        for (int j = 0; j < c; ++j) g(i, j) = arr.at(i, j);
    return g;
}

ClassCenters centers_from(const Eigen::MatrixXd& centers, const std::vector<int>& labels) {
    if (centers.rows() != static_cast<int>(labels.size()))
        throw ValidationError("centers rows must match center_labels length");
    ClassCenters out;
    for (size_t i = 0; i < labels.size(); ++i)
        out.centers[labels[i]] = centers.row(static_cast<int>(i)).transpose();
    return out;
}

nlohmann::json json_from_py(const py::dict& d) {
    const py::object dumps = py::module_::import("json").attr("dumps");
    return nlohmann::json::parse(dumps(d).cast<std::string>());
}

py::object py_from_json(const nlohmann::json& j) {
    const py::object loads = py::module_::import("json").attr("loads");
    return loads(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "style-embedding distribution discrepancy profiler (C++ core)";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<InitError>(m, "InitError", PyExc_RuntimeError);

    // ---- style statistics ----
    m.def(
        "gram_matrix",
        [](const py::array_t<float, py::array::c_style>& f) {
            return gram_matrix(feature_from_array(f)).cast<double>();
        },
        py::arg("feature_map"),
        "Channel co-activation matrix of a (C,H,W) feature map (unnormalized)");
    m.def(
        "gram_to_vector",
        [](const py::array_t<float, py::array::c_style>& g) {
            return gram_to_vector(gram_from_array(g));
        },
        py::arg("gram"), "Row-major upper-triangle flattening (diagonal included)");
    m.def("vector_to_gram", &vector_to_gram, py::arg("v"),
          "Inverse of gram_to_vector on symmetric matrices");
    m.def(
        "gram_vector",
        [](const py::array_t<float, py::array::c_style>& f, bool normalize) {
            return gram_vector(feature_from_array(f), normalize);
        },
        py::arg("feature_map"), py::arg("normalize") = true);

    // ---- metric learning ----
    m.def("cosine_similarity", &cosine_similarity, py::arg("a"), py::arg("b"));
    m.def(
        "batch_hard_mine",
        [](const Eigen::MatrixXd& pool_rows, const std::vector<int>& labels,
           int num_anchors) {
            MinedPairs p = batch_hard_mine(pool_rows.transpose(), labels, num_anchors);
            return py::make_tuple(p.anchors, p.positives, p.negatives, p.skipped);
        },
        py::arg("pool"), py::arg("labels"), py::arg("num_anchors") = -1,
        "Returns (anchors, hard_positives, hard_negatives, skipped); pool rows are samples");
    m.def(
        "center_loss",
        [](const Eigen::MatrixXd& emb_rows, const std::vector<int>& labels,
           const Eigen::MatrixXd& centers, const std::vector<int>& center_labels,
           bool squared) {
            return center_loss(emb_rows.transpose(), labels,
                               centers_from(centers, center_labels), squared);
        },
        py::arg("embeddings"), py::arg("labels"), py::arg("centers"),
        py::arg("center_labels"), py::arg("squared") = false);
    m.def(
        "decay_center_lr",
        [](int t, double eta0, double gamma) {
            TrainConfig cfg;
            cfg.center_lr_init = eta0;
            cfg.center_decay = gamma;
            return decay_center_lr(t, cfg);
        },
        py::arg("t"), py::arg("eta0") = 10.0, py::arg("gamma") = 0.9);
    m.def(
        "update_centers",
        [](const Eigen::MatrixXd& emb_rows, const std::vector<int>& labels,
           const Eigen::MatrixXd& centers, const std::vector<int>& center_labels,
           double eta_c, const std::string& rule, bool squared) {
            ClassCenters c = centers_from(centers, center_labels);
            update_centers(emb_rows.transpose(), labels, c, eta_c,
                           rule == "mean_shift" ? CenterUpdateRule::kMeanShift
                                                : CenterUpdateRule::kGradient,
                           squared);
            Eigen::MatrixXd out(centers.rows(), centers.cols());
            for (size_t i = 0; i < center_labels.size(); ++i)
                out.row(static_cast<int>(i)) = c.centers[center_labels[i]].transpose();
            return out;
        },
        py::arg("embeddings"), py::arg("labels"), py::arg("centers"),
        py::arg("center_labels"), py::arg("eta_c"), py::arg("rule") = "gradient",
        py::arg("squared") = false);
    m.def(
        "ntxent_loss",
        [](const Eigen::MatrixXd& pool_rows, const std::vector<int>& anchors,
           const std::vector<int>& positives, double tau) {
            return ntxent_loss(pool_rows.transpose(), anchors, positives, tau);
        },
        py::arg("pool"), py::arg("anchors"), py::arg("positives"), py::arg("tau"));
    m.def("total_loss", &total_loss, py::arg("ntxent"), py::arg("center"), py::arg("lambda_"));

    // ---- SEDD metrics ----
    m.def(
        "style_center",
        [](const Eigen::MatrixXd& emb_rows) {
            return style_center(emb_rows.transpose()).vector;
        },
        py::arg("embeddings"));
    m.def("sedd1",
          py::overload_cast<const Eigen::VectorXd&, const Eigen::VectorXd&>(&sedd1),
          py::arg("c_new"), py::arg("c_real"));
    m.def("gaussian_kernel", &gaussian_kernel, py::arg("x"), py::arg("y"),
          py::arg("sigma") = 10.0);
    m.def(
        "sedd2",
        [](const Eigen::MatrixXd& x_rows, const Eigen::MatrixXd& y_rows, double sigma) {
            return sedd2(x_rows.transpose(), y_rows.transpose(), sigma);
        },
        py::arg("x"), py::arg("y"), py::arg("sigma") = 10.0);
    m.def(
        "intra_class_variance",
        [](const Eigen::MatrixXd& emb_rows) {
            return intra_class_variance(emb_rows.transpose());
        },
        py::arg("embeddings"));

    // ---- dimensionality reduction ----
    m.def(
        "tsne_embed",
        [](const Eigen::MatrixXd& points_rows, double perplexity, int iterations,
           uint64_t seed) {
            TsneParams params;
            params.perplexity = perplexity;
            params.iterations = iterations;
            params.seed = seed;
            return Eigen::MatrixXd(tsne_embed(points_rows.transpose(), params).transpose());
        },
        py::arg("points"), py::arg("perplexity") = 30.0, py::arg("iterations") = 1000,
        py::arg("seed") = 0, "Exact t-SNE to 2-d; rows are samples");

    // ---- end-to-end entry points ----
    m.def(
        "generate_toy_corpus",
        [](const std::string& out_dir, int scenes, int size, uint64_t seed) {
            ToyCorpusConfig cfg;
            cfg.out_dir = out_dir;
            cfg.scenes = scenes;
            cfg.image_size = size;
            cfg.seed = seed;
            ToyCorpusResult r = generate_toy_corpus(cfg);
            return py::make_tuple(r.real_manifest.string(), r.mild_manifest.string(),
                                  r.strong_manifest.string());
        },
        py::arg("out_dir"), py::arg("scenes") = 300, py::arg("size") = 128,
        py::arg("seed") = 0);
    m.def(
        "train_run",
        [](const py::dict& config) {
            RunConfig cfg = runconfig_from_json(json_from_py(config));
            LoadedData data = load_and_split(cfg);
            TrainResult r = train(data.manifests, cfg.train, cfg.pipeline_config(),
                                  data.registry, cfg.out_dir, cfg.config_hash());
            py::dict out;
            out["checkpoint"] = r.checkpoint_path.string();
            out["log"] = r.log_path.string();
            out["reference"] = r.reference_path.string();
            out["final_total_loss"] = r.log.empty() ? 0.0 : r.log.back().total;
            return out;
        },
        py::arg("config"), "Run the full training loop from a RunConfig dict");
    m.def(
        "profile_run",
        [](const std::string& checkpoint, const std::string& reference,
           const std::string& manifest, double sigma, const std::string& split) {
            LabelRegistry scratch;
            DatasetManifest man = load_manifest(manifest, scratch);
            KernelParams kernel;
            kernel.bandwidth = sigma;
            const Split eval =
                split == "all" ? Split::kUnassigned : split_from_string(split);
            SEDDReport report =
                profile_dataset(man, load_reference(reference), checkpoint, kernel, eval);
            return py_from_json(report.to_json());
        },
        py::arg("checkpoint"), py::arg("reference"), py::arg("manifest"),
        py::arg("sigma") = 10.0, py::arg("split") = "all");
    m.def(
        "embed_manifest",
        [](const std::string& checkpoint, const std::string& manifest) {
            ModelState model = ModelState::load(checkpoint);
            LabelRegistry registry = model.registry();
            DatasetManifest man = load_manifest(manifest, registry);
            EmbeddingTable t = model.pipeline().embed_records(man.records, registry);
            Eigen::MatrixXd rows(t.rows.size(), t.dim);
            py::list paths, labels;
            for (size_t i = 0; i < t.rows.size(); ++i) {
                rows.row(static_cast<int>(i)) = t.rows[i].data.transpose();
                paths.append(t.rows[i].path);
                labels.append(t.rows[i].class_label);
            }
            return py::make_tuple(rows, paths, labels);
        },
        py::arg("checkpoint"), py::arg("manifest"),
        "Returns (embeddings, paths, class_labels) for every record in the manifest");

    m.attr("__version__") = "0.1.0";
}
