// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sedd/errors.hpp"

namespace sedd {

enum class Realism { kReal, kSynthetic };

enum class Split { kUnassigned, kTrain, kVal, kTest };

std::string to_string(Realism r);
std::string to_string(Split s);
Realism realism_from_string(const std::string& s);
Split split_from_string(const std::string& s);

struct ImageRecord {
    std::string path;
    std::string dataset_id;
    Realism realism = Realism::kSynthetic;
    std::string weather;   // optional tag, metadata only
    Split split = Split::kUnassigned;
    std::string scene_id;  // optional; groups content-identical frames
};

struct DatasetManifest {
    std::string dataset_id;
    Realism realism = Realism::kSynthetic;
    std::vector<ImageRecord> records;
    int class_label = -1;
};

// Assigns metric-learning class labels: every real dataset shares label 0,
// each synthetic dataset_id gets a unique label >= 1 in registration order.
class LabelRegistry {
public:
    int assign(const std::string& dataset_id, Realism realism);
    // Label for an already-registered dataset; throws ValidationError if unknown.
    int label_of(const std::string& dataset_id) const;
    bool contains(const std::string& dataset_id) const;
    // dataset_id -> label, insertion-ordered for synthetic ids.
    const std::vector<std::pair<std::string, int>>& entries() const { return entries_; }
    int num_labels() const { return next_synthetic_; }

    static LabelRegistry from_entries(const std::vector<std::pair<std::string, int>>& entries);

private:
    std::vector<std::pair<std::string, int>> entries_;
    int next_synthetic_ = 1;
};

struct LoadOptions {
    bool check_paths = true;  // require every record's image file to exist
};

// Parses a JSON-Lines manifest (one ImageRecord per line) and registers its
// dataset with the registry. All records must share one dataset_id/realism.
DatasetManifest load_manifest(const std::filesystem::path& path, LabelRegistry& registry,
                              const LoadOptions& opts = {});

struct SplitRatios {
    double train = 0.6;
    double val = 0.2;
    double test = 0.2;
};

// Deterministically assigns train/val/test splits. Proportions match the
// ratios within +-1 record per split; identical (manifest, seed) gives
// identical assignments.
DatasetManifest split_records(const DatasetManifest& manifest, const SplitRatios& ratios,
                              uint64_t seed);

std::vector<const ImageRecord*> records_in_split(const DatasetManifest& m, Split s);

}  // namespace sedd
