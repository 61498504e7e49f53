// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedd/embedding.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

namespace sedd {

void EmbeddingTable::append(StyleEmbedding e) {
    if (rows.empty())
        dim = static_cast<int>(e.data.size());
    else if (e.data.size() != dim)
        throw ValidationError("embedding dimension mismatch: table dim " +
                              std::to_string(dim) + ", row dim " +
                              std::to_string(e.data.size()));
    rows.push_back(std::move(e));
}

std::vector<std::string> EmbeddingTable::dataset_ids() const {
    std::vector<std::string> ids;
    for (const auto& r : rows)
        if (std::find(ids.begin(), ids.end(), r.dataset_id) == ids.end())
            ids.push_back(r.dataset_id);
    return ids;
}

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open embedding file for writing: " + path.string());
    out << "# sedd-embeddings v1 dim=" << table.dim << "\n";
    out << "path\tdataset_id\tclass_label\tweather\tscene_id\tsplit";
    for (int i = 0; i < table.dim; ++i) out << "\te" << i;
    out << "\n";
    char buf[32];
    for (const auto& r : table.rows) {
        out << r.path << '\t' << r.dataset_id << '\t' << r.class_label << '\t' << r.weather
            << '\t' << r.scene_id << '\t' << to_string(r.split);
        for (int i = 0; i < table.dim; ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", r.data[i]);
            out << '\t' << buf;
        }
        out << '\n';
    }
    if (!out) throw ValidationError("failed writing embedding file: " + path.string());
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("embedding file not found: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("# sedd-embeddings v1", 0) != 0)
        throw ParseError("not a sedd-embeddings v1 file: " + path.string());
    int dim = -1;
    if (auto pos = line.find("dim="); pos != std::string::npos)
        dim = std::stoi(line.substr(pos + 4));
    if (dim <= 0) throw ParseError("embedding file missing dim tag: " + path.string());
    std::getline(in, line);  // column header

    EmbeddingTable table;
    size_t line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string_view> fields;
        std::string_view sv(line);
        size_t start = 0;
        while (true) {
            size_t tab = sv.find('\t', start);
            fields.push_back(sv.substr(start, tab - start));
            if (tab == std::string_view::npos) break;
            start = tab + 1;
        }
        if (fields.size() != static_cast<size_t>(6 + dim))
            throw ParseError("embedding file line " + std::to_string(line_no) +
                             ": expected " + std::to_string(6 + dim) + " fields, got " +
                             std::to_string(fields.size()));
        StyleEmbedding e;
        e.path = std::string(fields[0]);
        e.dataset_id = std::string(fields[1]);
        e.class_label = std::stoi(std::string(fields[2]));
        e.weather = std::string(fields[3]);
        e.scene_id = std::string(fields[4]);
        e.split = split_from_string(std::string(fields[5]));
        e.data.resize(dim);
        for (int i = 0; i < dim; ++i) {
            const auto f = fields[6 + i];
            double v = 0.0;
            auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc())
                throw ParseError("embedding file line " + std::to_string(line_no) +
                                 ": bad float '" + std::string(f) + "'");
            e.data[i] = v;
        }
        table.append(std::move(e));
    }
    return table;
}

}  // namespace sedd
