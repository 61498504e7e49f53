// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sedd/runconfig.hpp"
#include "sedd/sedd_metrics.hpp"
#include "sedd/trainer.hpp"

namespace sedd {

struct LoadedData {
    std::vector<DatasetManifest> manifests;
    LabelRegistry registry;
};

// Loads config.manifests in listed order (labels follow registration order)
// and assigns splits deterministically from config.seed.
LoadedData load_and_split(const RunConfig& config);

struct BenchmarkRow {
    std::string dataset_id;
    SEDDReport report;
    bool failed = false;
    std::string error;
};

struct BenchmarkResult {
    std::vector<BenchmarkRow> rows;  // sorted by sedd1, failed rows last
    std::filesystem::path table_csv;
    std::filesystem::path detail_csv;
    std::filesystem::path table_txt;
    std::filesystem::path checkpoint_path;
    bool any_failed = false;
};

// Trains (or loads config.checkpoint), embeds every dataset's eval split,
// scores it against the pooled real train-split reference and renders the
// Datasets/SEDD1/SEDD2 table. A dataset that fails to embed marks its row
// failed and the run continues.
BenchmarkResult run_benchmark(const RunConfig& config);

struct SweepCell {
    double tau = 0.0;
    double lambda = 0.0;
    bool failed = false;
    double real_variance = 0.0;
    double center_distance = 0.0;
};

struct SweepResult {
    std::vector<SweepCell> cells;  // tau-major order
    std::filesystem::path csv_path;
    std::filesystem::path table_txt;
};

// Measurement behind each sweep cell (and directly testable against it):
// trains with the config as-is and reports real-class intra-class variance
// plus the center distance of the target synthetic dataset, both on the
// eval split.
SweepCell train_and_measure(const RunConfig& config);

// Full tau x lambda grid; each cell is an independent run with the same seed.
SweepResult run_hyperparameter_sweep(const RunConfig& base, const std::vector<double>& tau_grid,
                                     const std::vector<double>& lambda_grid);

}  // namespace sedd
