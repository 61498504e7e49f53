// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedd/viz.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace sedd {

namespace {

constexpr const char* kShapeNote =
    "t-SNE shapes are not comparable across runs; only relative cluster structure is meaningful";

const std::array<cv::Scalar, 10> kPalette = {
    cv::Scalar(180, 119, 31),  cv::Scalar(14, 127, 255),  cv::Scalar(44, 160, 44),
    cv::Scalar(40, 39, 214),   cv::Scalar(189, 103, 148), cv::Scalar(75, 86, 140),
    cv::Scalar(194, 119, 227), cv::Scalar(127, 127, 127), cv::Scalar(34, 189, 188),
    cv::Scalar(207, 190, 23)};

const std::array<cv::MarkerTypes, 5> kMarkers = {
    cv::MARKER_CROSS, cv::MARKER_TRIANGLE_UP, cv::MARKER_DIAMOND, cv::MARKER_SQUARE,
    cv::MARKER_TILTED_CROSS};

}  // namespace

VisualizeResult run_visualize(const std::vector<std::filesystem::path>& embedding_files,
                              int cap, uint64_t seed, const std::filesystem::path& out_dir,
                              const TsneParams& tsne_params, const std::string& config_hash) {
    if (embedding_files.empty())
        throw ValidationError("run_visualize needs at least one embedding file");
    if (cap < 1) throw ValidationError("sample cap must be positive");

    EmbeddingTable all;
    for (const auto& file : embedding_files) {
        EmbeddingTable t = load_embeddings(file);
        for (auto& row : t.rows) all.append(std::move(row));
    }

    // group rows per dataset, then subsample up to the cap
    std::vector<std::string> ids = all.dataset_ids();
    std::vector<const StyleEmbedding*> kept;
    std::mt19937_64 rng(seed);
    for (size_t d = 0; d < ids.size(); ++d) {
        std::vector<const StyleEmbedding*> rows;
        for (const auto& r : all.rows)
            if (r.dataset_id == ids[d]) rows.push_back(&r);
        if (static_cast<int>(rows.size()) > cap) {
            std::vector<size_t> idx(rows.size());
            std::iota(idx.begin(), idx.end(), 0);
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(cap);
            std::sort(idx.begin(), idx.end());  // stable output order
            std::vector<const StyleEmbedding*> sampled;
            for (size_t k : idx) sampled.push_back(rows[k]);
            rows = std::move(sampled);
        }
        kept.insert(kept.end(), rows.begin(), rows.end());
    }
    if (kept.size() < 2)
        throw ValidationError("run_visualize needs at least 2 points, got " +
                              std::to_string(kept.size()));

    Eigen::MatrixXd points(all.dim, static_cast<int>(kept.size()));
    for (size_t i = 0; i < kept.size(); ++i) points.col(static_cast<int>(i)) = kept[i]->data;

    TsneParams params = tsne_params;
    params.seed = seed;
    Eigen::MatrixXd coords = tsne_embed(points, params);

    std::filesystem::create_directories(out_dir);
    VisualizeResult result;
    result.points = static_cast<int>(kept.size());
    result.coords_path = out_dir / "tsne_coordinates.tsv";
    {
        std::ofstream out(result.coords_path);
        out << "# sedd-tsne v1 config_hash=" << config_hash << "\n";
        out << "# note: " << kShapeNote << "\n";
        out << "path\tdataset_id\tweather\tx\ty\n";
        char buf[64];
        for (size_t i = 0; i < kept.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g\t%.17g", coords(0, i), coords(1, i));
            out << kept[i]->path << '\t' << kept[i]->dataset_id << '\t' << kept[i]->weather
                << '\t' << buf << "\n";
        }
    }

    // ---- scatter plot ----
    const int width = 960, height = 760, margin = 60, footer = 56;
    cv::Mat canvas(height, width, CV_8UC3, cv::Scalar(255, 255, 255));
    const double x_min = coords.row(0).minCoeff(), x_max = coords.row(0).maxCoeff();
    const double y_min = coords.row(1).minCoeff(), y_max = coords.row(1).maxCoeff();
    const double x_span = std::max(x_max - x_min, 1e-9);
    const double y_span = std::max(y_max - y_min, 1e-9);
    auto to_px = [&](double x, double y) {
        const int px = margin + static_cast<int>((x - x_min) / x_span * (width - 2 * margin));
        const int py = height - footer - margin -
                       static_cast<int>((y - y_min) / y_span * (height - 2 * margin - footer));
        return cv::Point(px, py);
    };

    std::map<std::string, int> weather_marker;
    for (size_t i = 0; i < kept.size(); ++i) {
        const auto id_it = std::find(ids.begin(), ids.end(), kept[i]->dataset_id);
        const cv::Scalar color = kPalette[(id_it - ids.begin()) % kPalette.size()];
        const std::string& weather = kept[i]->weather;
        const cv::Point pt = to_px(coords(0, i), coords(1, i));
        if (weather.empty()) {
            cv::circle(canvas, pt, 3, color, cv::FILLED, cv::LINE_AA);
        } else {
            auto [it, inserted] =
                weather_marker.try_emplace(weather, static_cast<int>(weather_marker.size()));
            cv::drawMarker(canvas, pt, color, kMarkers[it->second % kMarkers.size()], 8, 1,
                           cv::LINE_AA);
        }
    }

    cv::rectangle(canvas, cv::Point(margin - 10, margin - 10),
                  cv::Point(width - margin + 10, height - footer - margin + 10),
                  cv::Scalar(120, 120, 120), 1);
    int legend_y = margin + 6;
    for (size_t d = 0; d < ids.size(); ++d) {
        const cv::Scalar color = kPalette[d % kPalette.size()];
        cv::circle(canvas, cv::Point(width - margin - 150, legend_y), 4, color, cv::FILLED,
                   cv::LINE_AA);
        cv::putText(canvas, ids[d], cv::Point(width - margin - 138, legend_y + 4),
                    cv::FONT_HERSHEY_SIMPLEX, 0.42, cv::Scalar(30, 30, 30), 1, cv::LINE_AA);
        legend_y += 18;
    }
    for (const auto& [weather, marker_idx] : weather_marker) {
        cv::drawMarker(canvas, cv::Point(width - margin - 150, legend_y),
                       cv::Scalar(60, 60, 60), kMarkers[marker_idx % kMarkers.size()], 8, 1,
                       cv::LINE_AA);
        cv::putText(canvas, weather, cv::Point(width - margin - 138, legend_y + 4),
                    cv::FONT_HERSHEY_SIMPLEX, 0.42, cv::Scalar(30, 30, 30), 1, cv::LINE_AA);
        legend_y += 18;
    }
    cv::putText(canvas, "style embedding t-SNE", cv::Point(margin, margin - 20),
                cv::FONT_HERSHEY_SIMPLEX, 0.6, cv::Scalar(20, 20, 20), 1, cv::LINE_AA);
    cv::putText(canvas, std::string("note: ") + kShapeNote,
                cv::Point(margin, height - footer + 18), cv::FONT_HERSHEY_SIMPLEX, 0.38,
                cv::Scalar(80, 80, 80), 1, cv::LINE_AA);
    if (!config_hash.empty())
        cv::putText(canvas, "config " + config_hash, cv::Point(margin, height - footer + 38),
                    cv::FONT_HERSHEY_SIMPLEX, 0.38, cv::Scalar(80, 80, 80), 1, cv::LINE_AA);

    result.plot_path = out_dir / "tsne_plot.png";
    if (!cv::imwrite(result.plot_path.string(), canvas))
        throw ValidationError("failed to write plot: " + result.plot_path.string());
    return result;
}

}  // namespace sedd
