// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedd/metric.hpp"

#include <cmath>

namespace sedd {

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size())
        throw ValidationError("cosine_similarity: dimension mismatch " +
                              std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0)
        throw NumericError("cosine_similarity undefined for zero-norm input");
    return a.dot(b) / (na * nb);
}

EmbeddingMemory::EmbeddingMemory(int capacity) : capacity_(capacity) {
    if (capacity <= 0) throw ValidationError("memory capacity must be positive");
}

void EmbeddingMemory::push(const Eigen::VectorXd& embedding, int label) {
    if (static_cast<int>(entries_.size()) == capacity_) entries_.pop_front();
    entries_.emplace_back(embedding, label);
}

MinedPairs batch_hard_mine(const Eigen::MatrixXd& pool, const std::vector<int>& labels,
                           int num_anchors) {
    const int n = static_cast<int>(pool.cols());
    if (static_cast<int>(labels.size()) != n)
        throw ValidationError("batch_hard_mine: labels size does not match pool");
    if (num_anchors < 0) num_anchors = n;
    if (num_anchors > n)
        throw ValidationError("batch_hard_mine: more anchors than pool entries");

    // Norms once; cosine via normalized dot products.
    Eigen::VectorXd norms(n);
    for (int i = 0; i < n; ++i) {
        norms[i] = pool.col(i).norm();
        if (norms[i] == 0.0)
            throw NumericError("batch_hard_mine: zero-norm embedding at pool index " +
                               std::to_string(i));
    }

    MinedPairs out;
    for (int i = 0; i < num_anchors; ++i) {
        int best_pos = -1, best_neg = -1;
        double best_pos_sim = 0.0, best_neg_sim = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double sim = pool.col(i).dot(pool.col(j)) / (norms[i] * norms[j]);
            if (labels[j] == labels[i]) {
                if (pool.col(j) == pool.col(i)) continue;  // exact duplicate of the anchor
                if (best_pos < 0 || sim < best_pos_sim) {
                    best_pos = j;
                    best_pos_sim = sim;
                }
            } else {
                if (best_neg < 0 || sim > best_neg_sim) {
                    best_neg = j;
                    best_neg_sim = sim;
                }
            }
        }
        if (best_pos < 0 || best_neg < 0) {
            ++out.skipped;
            continue;
        }
        out.anchors.push_back(i);
        out.positives.push_back(best_pos);
        out.negatives.push_back(best_neg);
    }
    return out;
}

namespace {

const Eigen::VectorXd& center_of(const ClassCenters& centers, int label) {
    auto it = centers.centers.find(label);
    if (it == centers.centers.end())
        throw ValidationError("no center registered for class label " + std::to_string(label));
    return it->second;
}

}  // namespace

double center_loss(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels,
                   const ClassCenters& centers, bool squared) {
    const int m = static_cast<int>(embeddings.cols());
    if (m == 0) throw ValidationError("center_loss: empty batch");
    if (static_cast<int>(labels.size()) != m)
        throw ValidationError("center_loss: labels size does not match batch");
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
        const double dist = (embeddings.col(i) - center_of(centers, labels[i])).norm();
        acc += squared ? 0.5 * dist * dist : dist;
    }
    return acc / m;
}

Eigen::MatrixXd center_loss_grad_embeddings(const Eigen::MatrixXd& embeddings,
                                            const std::vector<int>& labels,
                                            const ClassCenters& centers, bool squared) {
    const int m = static_cast<int>(embeddings.cols());
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(embeddings.rows(), m);
    for (int i = 0; i < m; ++i) {
        const Eigen::VectorXd diff = embeddings.col(i) - center_of(centers, labels[i]);
        if (squared) {
            grad.col(i) = diff / m;
        } else {
            const double dist = diff.norm();
            if (dist > 0.0) grad.col(i) = diff / (dist * m);
        }
    }
    return grad;
}

std::map<int, Eigen::VectorXd> center_loss_grad_centers(const Eigen::MatrixXd& embeddings,
                                                        const std::vector<int>& labels,
                                                        const ClassCenters& centers,
                                                        bool squared) {
    const int m = static_cast<int>(embeddings.cols());
    std::map<int, Eigen::VectorXd> grads;
    for (int i = 0; i < m; ++i) {
        const Eigen::VectorXd diff = embeddings.col(i) - center_of(centers, labels[i]);
        Eigen::VectorXd g;
        if (squared) {
            g = -diff / m;
        } else {
            const double dist = diff.norm();
            if (dist == 0.0) continue;
            g = -diff / (dist * m);
        }
        auto [it, inserted] = grads.try_emplace(labels[i], g);
        if (!inserted) it->second += g;
    }
    return grads;
}

void TrainConfig::validate() const {
    if (!(tau > 0.0)) throw ValidationError("tau must be positive");
    if (!(center_decay > 0.0 && center_decay <= 1.0))
        throw ValidationError("center decay gamma must be in (0, 1]");
    if (lambda < 0.0) throw ValidationError("lambda must be non-negative");
    if (batch_size < 2) throw ValidationError("batch_size must be at least 2");
    if (epochs < 1) throw ValidationError("epochs must be at least 1");
    if (memory_capacity < 1) throw ValidationError("memory capacity must be at least 1");
    if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
}

double decay_center_lr(int t, const TrainConfig& config) {
    if (t < 0) throw ValidationError("decay step must be non-negative");
    return config.center_lr_init * std::pow(config.center_decay, t);
}

void update_centers(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels,
                    ClassCenters& centers, double eta_c, CenterUpdateRule rule,
                    bool squared) {
    if (!(eta_c > 0.0)) throw ValidationError("center learning rate must be positive");
    if (rule == CenterUpdateRule::kGradient) {
        for (const auto& [label, grad] :
             center_loss_grad_centers(embeddings, labels, centers, squared)) {
            centers.centers.at(label) -= eta_c * grad;
        }
    } else {
        // Delta of the original center-loss formulation: sum of (c - z_i) over
        // the class, normalized by 1 + class count.
        std::map<int, std::pair<Eigen::VectorXd, int>> acc;
        for (int i = 0; i < static_cast<int>(embeddings.cols()); ++i) {
            const Eigen::VectorXd diff =
                center_of(centers, labels[i]) - embeddings.col(i);
            auto [it, inserted] = acc.try_emplace(labels[i], std::make_pair(diff, 1));
            if (!inserted) {
                it->second.first += diff;
                it->second.second += 1;
            }
        }
        for (const auto& [label, sum_count] : acc)
            centers.centers.at(label) -=
                eta_c * sum_count.first / (1.0 + sum_count.second);
    }
    centers.center_lr = eta_c;
}

double ntxent_loss(const Eigen::MatrixXd& pool, const std::vector<int>& anchors,
                   const std::vector<int>& positives, double tau) {
    return ntxent_loss_grad(pool, anchors, positives, tau, nullptr);
}

double ntxent_loss_grad(const Eigen::MatrixXd& pool, const std::vector<int>& anchors,
                        const std::vector<int>& positives, double tau,
                        Eigen::MatrixXd* d_pool) {
    if (!(tau > 0.0)) throw ValidationError("ntxent temperature must be positive");
    if (anchors.size() != positives.size())
        throw ValidationError("ntxent_loss: anchor/positive count mismatch");
    const int n = static_cast<int>(pool.cols());
    const bool want_grad = d_pool != nullptr;
    if (want_grad) *d_pool = Eigen::MatrixXd::Zero(pool.rows(), n);

    Eigen::VectorXd norms(n);
    for (int j = 0; j < n; ++j) {
        norms[j] = pool.col(j).norm();
        if (norms[j] == 0.0)
            throw NumericError("ntxent_loss: zero-norm embedding at pool index " +
                               std::to_string(j));
    }

    double loss = 0.0;
    Eigen::VectorXd sims(n), weights(n);
    for (size_t a = 0; a < anchors.size(); ++a) {
        const int i = anchors[a];
        const int p = positives[a];
        if (i < 0 || i >= n || p < 0 || p >= n || p == i)
            throw ValidationError("ntxent_loss: pair indices out of range");
        for (int k = 0; k < n; ++k)
            sims[k] = k == i ? 0.0 : pool.col(i).dot(pool.col(k)) / (norms[i] * norms[k]);

        // log-sum-exp over k != i
        double max_arg = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < n; ++k)
            if (k != i) max_arg = std::max(max_arg, sims[k] / tau);
        double denom = 0.0;
        for (int k = 0; k < n; ++k)
            denom += k == i ? 0.0 : std::exp(sims[k] / tau - max_arg);
        loss += -(sims[p] / tau) + max_arg + std::log(denom);

        if (!want_grad) continue;
        // dl/ds_k = softmax_k / tau for k != i, minus 1/tau extra on the positive
        for (int k = 0; k < n; ++k)
            weights[k] = k == i ? 0.0 : std::exp(sims[k] / tau - max_arg) / denom / tau;
        weights[p] -= 1.0 / tau;
        for (int k = 0; k < n; ++k) {
            if (k == i || weights[k] == 0.0) continue;
            const double w = weights[k];
            const double inv = 1.0 / (norms[i] * norms[k]);
            // d sim / d a and d sim / d b for sim = a.b/(|a||b|)
            d_pool->col(i) +=
                w * (pool.col(k) * inv - sims[k] * pool.col(i) / (norms[i] * norms[i]));
            d_pool->col(k) +=
                w * (pool.col(i) * inv - sims[k] * pool.col(k) / (norms[k] * norms[k]));
        }
    }
    return loss;
}

double total_loss(double ntxent, double center, double lambda) {
    if (lambda < 0.0) throw ValidationError("lambda must be non-negative");
    return ntxent + lambda * center;
}

}  // namespace sedd
