// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <deque>
#include <map>
#include <vector>

#include "sedd/errors.hpp"

namespace sedd {

// a.b / (|a||b|), accumulated in double. Throws NumericError on zero norm.
double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// FIFO ring of detached (embedding, label) pairs from recent batches. Only
// low-dimensional embeddings are retained, never images or Gram matrices.
class EmbeddingMemory {
public:
    explicit EmbeddingMemory(int capacity);

    void push(const Eigen::VectorXd& embedding, int label);
    size_t size() const { return entries_.size(); }
    int capacity() const { return capacity_; }
    // Oldest first.
    const std::deque<std::pair<Eigen::VectorXd, int>>& entries() const { return entries_; }

private:
    int capacity_;
    std::deque<std::pair<Eigen::VectorXd, int>> entries_;
};

struct MinedPairs {
    std::vector<int> anchors;    // pool column indices of anchors that kept both pairs
    std::vector<int> positives;  // hard positive per kept anchor
    std::vector<int> negatives;  // hard negative per kept anchor
    int skipped = 0;             // anchors dropped for lacking a positive or negative
};

// Batch-hard mining over pool columns. Per anchor the hard positive is the
// same-class sample with minimum cosine similarity and the hard negative the
// different-class sample with maximum cosine similarity; ties break to the
// lowest pool index. Bitwise-identical duplicates of the anchor are not
// eligible positives. Anchors are the first num_anchors columns (all columns
// when num_anchors < 0).
MinedPairs batch_hard_mine(const Eigen::MatrixXd& pool, const std::vector<int>& labels,
                           int num_anchors = -1);

struct ClassCenters {
    std::map<int, Eigen::VectorXd> centers;  // class label -> learnable center
    double center_lr = 10.0;                 // current eta_c
};

// Mean unsquared Euclidean distance between embeddings (columns) and their
// class centers; the conventional squared form (1/2m sum ||.||^2) sits behind
// the `squared` switch.
double center_loss(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels,
                   const ClassCenters& centers, bool squared = false);

// dL_C/dZ for the selected form. The gradient at z == c is defined as zero.
Eigen::MatrixXd center_loss_grad_embeddings(const Eigen::MatrixXd& embeddings,
                                            const std::vector<int>& labels,
                                            const ClassCenters& centers,
                                            bool squared = false);

// dL_C/dc per touched class.
std::map<int, Eigen::VectorXd> center_loss_grad_centers(const Eigen::MatrixXd& embeddings,
                                                        const std::vector<int>& labels,
                                                        const ClassCenters& centers,
                                                        bool squared = false);

enum class CenterUpdateRule {
    kGradient,   // c -= eta_c * dL_C/dc (default)
    kMeanShift,  // class-count-normalized delta of the original center-loss paper
};

struct TrainConfig {
    double learning_rate = 5e-5;  // backbone and projection head
    int epochs = 4;
    double lambda = 0.5;  // balance between NTXent and center loss
    double tau = 0.015;   // NTXent temperature
    double momentum = 0.9;
    double weight_decay = 1e-4;  // applied to backbone/head, never to centers
    double center_lr_init = 10.0;
    double center_decay = 0.9;  // gamma; the decay step advances per epoch
    int batch_size = 32;
    uint64_t seed = 0;
    int memory_capacity = 100;
    bool center_loss_squared = false;
    CenterUpdateRule center_update = CenterUpdateRule::kGradient;

    void validate() const;
};

// eta_c^(t) = eta_c^0 * gamma^t
double decay_center_lr(int t, const TrainConfig& config);

// Applies one center update with step eta_c. Classes absent from the batch
// are untouched.
void update_centers(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels,
                    ClassCenters& centers, double eta_c,
                    CenterUpdateRule rule = CenterUpdateRule::kGradient,
                    bool squared = false);

// Sum over mined (anchor, positive) pairs of
//   -log exp(sim(A_i,P_i)/tau) / sum_{k != i} exp(sim(A_i,S_k)/tau)
// where S ranges over all pool columns and only the anchor itself is excluded
// from the denominator.
double ntxent_loss(const Eigen::MatrixXd& pool, const std::vector<int>& anchors,
                   const std::vector<int>& positives, double tau);

// Loss plus (when d_pool is non-null) gradient w.r.t. every pool column;
// memory columns are sliced off by the caller.
double ntxent_loss_grad(const Eigen::MatrixXd& pool, const std::vector<int>& anchors,
                        const std::vector<int>& positives, double tau,
                        Eigen::MatrixXd* d_pool);

// L_total = L_NTXent + lambda * L_C
double total_loss(double ntxent, double center, double lambda);

}  // namespace sedd
