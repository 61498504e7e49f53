// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedd/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

namespace sedd {

using nlohmann::json;

std::string to_string(Realism r) {
    return r == Realism::kReal ? "real" : "synthetic";
}

std::string to_string(Split s) {
    switch (s) {
        case Split::kTrain: return "train";
        case Split::kVal: return "val";
        case Split::kTest: return "test";
        default: return "unassigned";
    }
}

Realism realism_from_string(const std::string& s) {
    if (s == "real") return Realism::kReal;
    if (s == "synthetic") return Realism::kSynthetic;
    throw ValidationError("unknown realism value '" + s + "' (expected real|synthetic)");
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::kTrain;
    if (s == "val") return Split::kVal;
    if (s == "test") return Split::kTest;
    if (s.empty() || s == "unassigned") return Split::kUnassigned;
    throw ValidationError("unknown split value '" + s + "' (expected train|val|test)");
}

int LabelRegistry::assign(const std::string& dataset_id, Realism realism) {
    for (const auto& [id, label] : entries_)
        if (id == dataset_id) return label;
    int label = realism == Realism::kReal ? 0 : next_synthetic_++;
    entries_.emplace_back(dataset_id, label);
    return label;
}

int LabelRegistry::label_of(const std::string& dataset_id) const {
    for (const auto& [id, label] : entries_)
        if (id == dataset_id) return label;
    throw ValidationError("dataset '" + dataset_id + "' is not registered");
}

bool LabelRegistry::contains(const std::string& dataset_id) const {
    for (const auto& [id, label] : entries_)
        if (id == dataset_id) return true;
    return false;
}

LabelRegistry LabelRegistry::from_entries(const std::vector<std::pair<std::string, int>>& entries) {
    LabelRegistry r;
    r.entries_ = entries;
    for (const auto& [id, label] : entries)
        r.next_synthetic_ = std::max(r.next_synthetic_, label + 1);
    return r;
}

namespace {

std::string require_string(const json& j, const char* field, size_t line_no) {
    if (!j.contains(field))
        throw ParseError("manifest line " + std::to_string(line_no) + ": missing \"" +
                         field + "\" field");
    if (!j[field].is_string())
        throw ParseError("manifest line " + std::to_string(line_no) + ": \"" + field +
                         "\" must be a string");
    return j[field].get<std::string>();
}

std::string optional_string(const json& j, const char* field) {
    if (!j.contains(field) || j[field].is_null()) return {};
    return j[field].get<std::string>();
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& path, LabelRegistry& registry,
                              const LoadOptions& opts) {
    std::ifstream in(path);
    if (!in) throw ValidationError("manifest file not found: " + path.string());

    DatasetManifest m;
    std::set<std::string> seen_paths;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }

        ImageRecord rec;
        rec.path = require_string(j, "path", line_no);
        rec.dataset_id = require_string(j, "dataset_id", line_no);
        try {
            rec.realism = realism_from_string(require_string(j, "realism", line_no));
            rec.split = split_from_string(optional_string(j, "split"));
        } catch (const ValidationError& e) {
            throw ValidationError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        rec.weather = optional_string(j, "weather");
        rec.scene_id = optional_string(j, "scene_id");

        if (!seen_paths.insert(rec.path).second)
            throw ValidationError("manifest line " + std::to_string(line_no) +
                                  ": duplicate path '" + rec.path + "'");
        if (m.records.empty()) {
            m.dataset_id = rec.dataset_id;
            m.realism = rec.realism;
        } else if (rec.dataset_id != m.dataset_id) {
            throw ValidationError("manifest line " + std::to_string(line_no) +
                                  ": dataset_id '" + rec.dataset_id +
                                  "' differs from '" + m.dataset_id + "'");
        } else if (rec.realism != m.realism) {
            throw ValidationError("manifest line " + std::to_string(line_no) +
                                  ": mixed realism values within one manifest");
        }
        if (opts.check_paths && !std::filesystem::exists(rec.path))
            throw ValidationError("manifest line " + std::to_string(line_no) +
                                  ": image file not found: " + rec.path);
        m.records.push_back(std::move(rec));
    }
    if (m.records.empty())
        throw ValidationError("manifest is empty: " + path.string());
    m.class_label = registry.assign(m.dataset_id, m.realism);
    return m;
}

DatasetManifest split_records(const DatasetManifest& manifest, const SplitRatios& ratios,
                              uint64_t seed) {
    if (manifest.records.empty()) throw ValidationError("cannot split an empty manifest");
    const double sum = ratios.train + ratios.val + ratios.test;
    if (std::abs(sum - 1.0) > 1e-9)
        throw ValidationError("split ratios must sum to 1 (got " + std::to_string(sum) + ")");
    if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0)
        throw ValidationError("split ratios must be non-negative");

    const size_t n = manifest.records.size();
    // Largest-remainder apportionment keeps every split within one record
    // of its exact share.
    const double shares[3] = {ratios.train * n, ratios.val * n, ratios.test * n};
    size_t counts[3];
    double rem[3];
    size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        counts[i] = static_cast<size_t>(shares[i]);
        rem[i] = shares[i] - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    while (assigned < n) {
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (rem[i] > rem[best]) best = i;
        ++counts[best];
        rem[best] = -1.0;
        ++assigned;
    }

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    DatasetManifest out = manifest;
    for (size_t k = 0; k < n; ++k) {
        Split s = k < counts[0]               ? Split::kTrain
                  : k < counts[0] + counts[1] ? Split::kVal
                                              : Split::kTest;
        out.records[order[k]].split = s;
    }
    return out;
}

std::vector<const ImageRecord*> records_in_split(const DatasetManifest& m, Split s) {
    std::vector<const ImageRecord*> out;
    for (const auto& r : m.records)
        if (r.split == s) out.push_back(&r);
    return out;
}

}  // namespace sedd
