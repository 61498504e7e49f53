// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedd/tsne.hpp"

#include <cmath>
#include <iostream>
#include <random>

#include "sedd/errors.hpp"

namespace sedd {

namespace {

// Per-row precision search so each conditional distribution hits the target
// perplexity.
Eigen::MatrixXd conditional_affinities(const Eigen::MatrixXd& sq_dists, double perplexity) {
    const int n = static_cast<int>(sq_dists.rows());
    const double target_entropy = std::log(perplexity);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        double beta = 1.0, beta_min = -std::numeric_limits<double>::infinity(),
               beta_max = std::numeric_limits<double>::infinity();
        Eigen::VectorXd row(n);
        for (int iter = 0; iter < 50; ++iter) {
            double sum = 0.0;
            for (int j = 0; j < n; ++j) {
                row[j] = j == i ? 0.0 : std::exp(-beta * sq_dists(i, j));
                sum += row[j];
            }
            double entropy = 0.0;
            if (sum > 0.0) {
                double dot = 0.0;
                for (int j = 0; j < n; ++j) dot += row[j] * sq_dists(i, j);
                entropy = std::log(sum) + beta * dot / sum;
            }
            const double diff = entropy - target_entropy;
            if (std::abs(diff) < 1e-5) break;
            if (diff > 0) {
                beta_min = beta;
                beta = std::isinf(beta_max) ? beta * 2.0 : (beta + beta_max) / 2.0;
            } else {
                beta_max = beta;
                beta = std::isinf(beta_min) ? beta / 2.0 : (beta + beta_min) / 2.0;
            }
        }
        const double sum = row.sum();
        if (sum > 0.0) p.row(i) = row / sum;
    }
    return p;
}

}  // namespace

Eigen::MatrixXd tsne_embed(const Eigen::MatrixXd& points, const TsneParams& params) {
    const int n = static_cast<int>(points.cols());
    if (n < 2) throw ValidationError("t-SNE requires at least 2 points");
    if (params.iterations < 1) throw ValidationError("t-SNE iterations must be positive");

    double perplexity = params.perplexity;
    const double max_perp = (n - 1) / 3.0;
    if (perplexity > max_perp) {
        perplexity = std::max(1.0, max_perp);
        std::cerr << "[sedd] warning: perplexity clamped to " << perplexity
                  << " for sample size " << n << "\n";
    }

    Eigen::MatrixXd sq_dists(n, n);
    for (int i = 0; i < n; ++i) {
        sq_dists(i, i) = 0.0;
        for (int j = i + 1; j < n; ++j) {
            const double d = (points.col(i) - points.col(j)).squaredNorm();
            sq_dists(i, j) = d;
            sq_dists(j, i) = d;
        }
    }

    Eigen::MatrixXd p = conditional_affinities(sq_dists, perplexity);
    p = (p + p.transpose()) / (2.0 * n);
    p = p.cwiseMax(1e-12);

    std::mt19937_64 rng(params.seed);
    std::normal_distribution<double> init(0.0, 1e-4);
    Eigen::MatrixXd y(2, n);
    for (int i = 0; i < n; ++i)
        for (int d = 0; d < 2; ++d) y(d, i) = init(rng);

    Eigen::MatrixXd increments = Eigen::MatrixXd::Zero(2, n);
    Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(2, n);
    Eigen::MatrixXd q(n, n), grad(2, n);

    for (int iter = 0; iter < params.iterations; ++iter) {
        const double exaggeration =
            iter < params.exaggeration_iters ? params.early_exaggeration : 1.0;
        const double momentum = iter < params.momentum_switch_iter ? params.initial_momentum
                                                                   : params.final_momentum;

        double z = 0.0;
        for (int i = 0; i < n; ++i) {
            q(i, i) = 0.0;
            for (int j = i + 1; j < n; ++j) {
                const double t = 1.0 / (1.0 + (y.col(i) - y.col(j)).squaredNorm());
                q(i, j) = t;
                q(j, i) = t;
                z += 2.0 * t;
            }
        }
        z = std::max(z, 1e-12);

        grad.setZero();
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const double mult = (exaggeration * p(i, j) - q(i, j) / z) * q(i, j);
                grad.col(i) += 4.0 * mult * (y.col(i) - y.col(j));
            }
        }

        for (int i = 0; i < n; ++i) {
            for (int d = 0; d < 2; ++d) {
                const bool same_sign = (grad(d, i) > 0.0) == (increments(d, i) > 0.0);
                gains(d, i) = same_sign ? std::max(gains(d, i) * 0.8, 0.01)
                                        : gains(d, i) + 0.2;
                increments(d, i) =
                    momentum * increments(d, i) - params.learning_rate * gains(d, i) * grad(d, i);
            }
        }
        y += increments;
        y.colwise() -= y.rowwise().mean();
    }
    return y;
}

}  // namespace sedd
