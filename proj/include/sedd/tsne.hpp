// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace sedd {

struct TsneParams {
    double perplexity = 30.0;
    int iterations = 1000;
    uint64_t seed = 0;
    double learning_rate = 200.0;
    double early_exaggeration = 12.0;
    int exaggeration_iters = 250;
    int momentum_switch_iter = 250;
    double initial_momentum = 0.5;
    double final_momentum = 0.8;
};

// Exact (dense) t-SNE to 2 dimensions. Columns of `points` are samples;
// output is 2 x N. Deterministic for a fixed seed. Perplexity is clamped to
// (N-1)/3 when the sample is too small for the requested value.
Eigen::MatrixXd tsne_embed(const Eigen::MatrixXd& points, const TsneParams& params);

}  // namespace sedd
