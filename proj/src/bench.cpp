// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedd/bench.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "sedd/model_state.hpp"

namespace sedd {

namespace {

uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t h = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdull;
    h ^= h >> 33;
    return h;
}

Split eval_split_of(const RunConfig& config) {
    if (config.eval_split == "all") return Split::kUnassigned;
    return split_from_string(config.eval_split);
}

std::vector<ImageRecord> real_train_records(const std::vector<DatasetManifest>& manifests) {
    std::vector<ImageRecord> out;
    for (const auto& m : manifests)
        if (m.realism == Realism::kReal)
            for (const auto* rec : records_in_split(m, Split::kTrain)) out.push_back(*rec);
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

}  // namespace

LoadedData load_and_split(const RunConfig& config) {
    if (config.manifests.empty()) throw ConfigError("config lists no manifests");
    LoadedData data;
    uint64_t index = 0;
    for (const auto& path : config.manifests) {
        DatasetManifest m = load_manifest(path, data.registry);
        data.manifests.push_back(split_records(m, config.split_ratios, mix(config.seed, index)));
        ++index;
    }
    return data;
}

BenchmarkResult run_benchmark(const RunConfig& config) {
    const std::filesystem::path out_dir = config.out_dir;
    std::filesystem::create_directories(out_dir);
    LoadedData data = load_and_split(config);
    const std::string hash = config.config_hash();

    BenchmarkResult result;
    std::unique_ptr<ModelState> model;
    if (config.checkpoint.empty()) {
        TrainResult tr = train(data.manifests, config.train, config.pipeline_config(),
                               data.registry, out_dir, hash);
        result.checkpoint_path = tr.checkpoint_path;
        model = std::make_unique<ModelState>(ModelState::load(tr.checkpoint_path));
    } else {
        result.checkpoint_path = config.checkpoint;
        model = std::make_unique<ModelState>(ModelState::load(config.checkpoint));
    }

    // Reference: pooled real-class train-split embeddings under this model.
    EmbeddingTable ref_table =
        model->pipeline().embed_records(real_train_records(data.manifests), model->registry());
    if (ref_table.rows.empty())
        throw ValidationError("benchmark reference is empty (no real train records)");
    RealReference reference = RealReference::from_table(ref_table);
    save_embeddings(ref_table, out_dir / "reference_embeddings.tsv");

    const Split eval_split = eval_split_of(config);
    std::filesystem::create_directories(out_dir / "embeddings");
    for (const auto& manifest : data.manifests) {
        BenchmarkRow row;
        row.dataset_id = manifest.dataset_id;
        try {
            row.report = profile_dataset(manifest, reference, *model, config.kernel, eval_split);
            std::vector<ImageRecord> eval_records;
            for (const auto& rec : manifest.records)
                if (eval_split == Split::kUnassigned || rec.split == eval_split)
                    eval_records.push_back(rec);
            save_embeddings(model->pipeline().embed_records(eval_records, model->registry()),
                            out_dir / "embeddings" / (manifest.dataset_id + ".tsv"));
        } catch (const Error& e) {
            row.failed = true;
            row.error = e.what();
            result.any_failed = true;
            std::cerr << "[sedd] benchmark row failed for " << manifest.dataset_id << ": "
                      << e.what() << "\n";
        }
        result.rows.push_back(std::move(row));
    }

    std::stable_sort(result.rows.begin(), result.rows.end(),
                     [](const BenchmarkRow& a, const BenchmarkRow& b) {
                         if (a.failed != b.failed) return !a.failed;
                         return a.report.sedd1 < b.report.sedd1;
                     });

    result.table_csv = out_dir / "benchmark_table.csv";
    {
        std::ofstream csv(result.table_csv);
        csv << "Datasets,SEDD1,SEDD2\n";
        for (const auto& row : result.rows) {
            if (row.failed) {
                csv << row.dataset_id << ",failed,failed\n";
            } else {
                csv << row.dataset_id << "," << fmt(row.report.sedd1) << ","
                    << (row.report.sedd2 ? fmt(*row.report.sedd2) : "n/a") << "\n";
            }
        }
    }

    result.detail_csv = out_dir / "benchmark_detail.csv";
    {
        std::ofstream csv(result.detail_csv);
        csv << "dataset_id,status,sedd1,sedd2,m,n,intra_class_variance,reference_id,"
               "config_hash\n";
        char buf[256];
        for (const auto& row : result.rows) {
            if (row.failed) {
                csv << row.dataset_id << ",failed,,,,,,," << hash << "\n";
                continue;
            }
            const auto& r = row.report;
            std::snprintf(buf, sizeof(buf), "%s,ok,%.17g,%.17g,%d,%d,%.17g,%s,%s\n",
                          row.dataset_id.c_str(), r.sedd1, r.sedd2.value_or(std::nan("")),
                          r.m, r.n, r.intra_class_variance.value_or(std::nan("")),
                          r.reference_id.c_str(), r.config_hash.c_str());
            csv << buf;
        }
    }

    result.table_txt = out_dir / "benchmark_table.txt";
    {
        size_t name_w = 8;
        for (const auto& row : result.rows) name_w = std::max(name_w, row.dataset_id.size());
        std::ofstream txt(result.table_txt);
        txt << std::left << std::setw(static_cast<int>(name_w) + 2) << "Datasets"
            << std::setw(10) << "SEDD1" << std::setw(10) << "SEDD2" << "\n";
        for (const auto& row : result.rows) {
            txt << std::left << std::setw(static_cast<int>(name_w) + 2) << row.dataset_id;
            if (row.failed)
                txt << std::setw(10) << "failed" << std::setw(10) << "failed";
            else
                txt << std::setw(10) << fmt(row.report.sedd1) << std::setw(10)
                    << (row.report.sedd2 ? fmt(*row.report.sedd2) : "n/a");
            txt << "\n";
        }
    }
    return result;
}

SweepCell train_and_measure(const RunConfig& config) {
    LoadedData data = load_and_split(config);
    SweepCell cell;
    cell.tau = config.train.tau;
    cell.lambda = config.train.lambda;

    std::string target = config.sweep_target;
    if (target.empty()) {
        for (const auto& m : data.manifests)
            if (m.realism == Realism::kSynthetic) {
                target = m.dataset_id;
                break;
            }
    }
    if (target.empty()) throw ConfigError("sweep needs a synthetic target dataset");

    InMemoryTrainResult tr = train_in_memory(data.manifests, config.train,
                                             config.pipeline_config(), data.registry,
                                             config.config_hash());
    const Split eval_split = eval_split_of(config);

    std::vector<ImageRecord> real_eval;
    std::vector<ImageRecord> target_eval;
    for (const auto& m : data.manifests)
        for (const auto& rec : m.records) {
            if (eval_split != Split::kUnassigned && rec.split != eval_split) continue;
            if (m.realism == Realism::kReal) real_eval.push_back(rec);
            if (m.dataset_id == target) target_eval.push_back(rec);
        }
    if (real_eval.size() < 2 || target_eval.size() < 2)
        throw ValidationError("sweep eval split too small");

    StylePipeline& pipeline = tr.model->pipeline();
    const Eigen::MatrixXd real_emb =
        embeddings_as_matrix(pipeline.embed_records(real_eval, tr.model->registry()));
    const Eigen::MatrixXd target_emb =
        embeddings_as_matrix(pipeline.embed_records(target_eval, tr.model->registry()));

    cell.real_variance = intra_class_variance(real_emb);
    cell.center_distance = sedd1(style_center(target_emb).vector, style_center(real_emb).vector);
    return cell;
}

SweepResult run_hyperparameter_sweep(const RunConfig& base, const std::vector<double>& tau_grid,
                                     const std::vector<double>& lambda_grid) {
    if (tau_grid.empty() || lambda_grid.empty())
        throw ValidationError("sweep grids must be non-empty");
    const std::filesystem::path out_dir = base.out_dir;
    std::filesystem::create_directories(out_dir);

    SweepResult result;
    for (double tau : tau_grid) {
        for (double lambda : lambda_grid) {
            RunConfig cfg = base;
            cfg.train.tau = tau;
            cfg.train.lambda = lambda;
            SweepCell cell;
            cell.tau = tau;
            cell.lambda = lambda;
            try {
                cell = train_and_measure(cfg);
            } catch (const Error& e) {
                cell.failed = true;
                std::cerr << "[sedd] sweep cell (tau=" << tau << ", lambda=" << lambda
                          << ") failed: " << e.what() << "\n";
            }
            result.cells.push_back(cell);
        }
    }

    auto cell_text = [](const SweepCell& c) {
        return c.failed ? std::string("failed") : fmt(c.real_variance) + " / " +
                                                      fmt(c.center_distance);
    };

    result.csv_path = out_dir / "sweep_table.csv";
    {
        std::ofstream csv(result.csv_path);
        csv << "tau\\lambda";
        for (double l : lambda_grid) csv << "," << l;
        csv << "\n";
        size_t idx = 0;
        for (double tau : tau_grid) {
            csv << tau;
            for (size_t j = 0; j < lambda_grid.size(); ++j)
                csv << "," << cell_text(result.cells[idx++]);
            csv << "\n";
        }
    }

    result.table_txt = out_dir / "sweep_table.txt";
    {
        std::ofstream txt(result.table_txt);
        txt << "cells are 'real dataset variance / center distance'\n";
        txt << std::left << std::setw(10) << "tau\\lam";
        for (double l : lambda_grid) txt << std::setw(20) << l;
        txt << "\n";
        size_t idx = 0;
        for (double tau : tau_grid) {
            txt << std::left << std::setw(10) << tau;
            for (size_t j = 0; j < lambda_grid.size(); ++j)
                txt << std::setw(20) << cell_text(result.cells[idx++]);
            txt << "\n";
        }
    }
    return result;
}

}  // namespace sedd
