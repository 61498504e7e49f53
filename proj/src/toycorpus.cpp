// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedd/toycorpus.hpp"

#include <fstream>
#include <random>

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "sedd/errors.hpp"

namespace sedd {

namespace {

uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t h = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdull;
    h ^= h >> 33;
    return h;
}

cv::Mat value_noise(int size, int grid, std::mt19937_64& rng) {
    std::uniform_real_distribution<float> uni(0.0f, 1.0f);
    cv::Mat coarse(grid, grid, CV_32F);
    for (int y = 0; y < grid; ++y)
        for (int x = 0; x < grid; ++x) coarse.at<float>(y, x) = uni(rng);
    cv::Mat fine;
    cv::resize(coarse, fine, cv::Size(size, size), 0, 0, cv::INTER_CUBIC);
    return fine;
}

// Photo-like base scene: fractal luminance mapped through a two-color
// palette, a sky/ground gradient and a few soft foreground blobs.
cv::Mat render_scene(int size, std::mt19937_64& rng) {
    std::uniform_real_distribution<float> uni(0.0f, 1.0f);

    cv::Mat lum = cv::Mat::zeros(size, size, CV_32F);
    float weight = 0.55f, total = 0.0f;
    for (int grid = 4; grid <= size / 2; grid *= 2) {
        cv::Mat octave = value_noise(size, grid, rng);
        lum += weight * octave;
        total += weight;
        weight *= 0.55f;
    }
    lum /= total;

    // palette endpoints biased toward natural tones
    cv::Vec3f pal_a(0.15f + 0.5f * uni(rng), 0.25f + 0.5f * uni(rng),
                    0.25f + 0.5f * uni(rng));
    cv::Vec3f pal_b(0.35f + 0.6f * uni(rng), 0.35f + 0.55f * uni(rng),
                    0.30f + 0.5f * uni(rng));
    cv::Vec3f sky(0.55f + 0.4f * uni(rng), 0.45f + 0.35f * uni(rng),
                  0.35f + 0.3f * uni(rng));
    const float horizon = 0.25f + 0.35f * uni(rng);

    cv::Mat img(size, size, CV_32FC3);
    for (int y = 0; y < size; ++y) {
        const float fy = static_cast<float>(y) / size;
        const float sky_alpha = fy < horizon ? 1.0f - fy / horizon : 0.0f;
        for (int x = 0; x < size; ++x) {
            const float l = lum.at<float>(y, x);
            cv::Vec3f c = pal_a * l + pal_b * (1.0f - l);
            c = c * (1.0f - 0.7f * sky_alpha) + sky * (0.7f * sky_alpha);
            img.at<cv::Vec3f>(y, x) = c;
        }
    }

    const int blobs = 3 + static_cast<int>(uni(rng) * 5.0f);
    for (int b = 0; b < blobs; ++b) {
        const cv::Point center(static_cast<int>(uni(rng) * size),
                               static_cast<int>(uni(rng) * size));
        const cv::Size axes(4 + static_cast<int>(uni(rng) * size / 4),
                            4 + static_cast<int>(uni(rng) * size / 4));
        const cv::Vec3f color(0.1f + 0.8f * uni(rng), 0.1f + 0.8f * uni(rng),
                              0.1f + 0.8f * uni(rng));
        const float alpha = 0.25f + 0.5f * uni(rng);
        cv::Mat overlay = img.clone();
        cv::ellipse(overlay, center, axes, 360.0 * uni(rng), 0, 360,
                    cv::Scalar(color[0], color[1], color[2]), cv::FILLED, cv::LINE_AA);
        cv::addWeighted(overlay, alpha, img, 1.0f - alpha, 0.0, img);
    }

    cv::Mat out8;
    img.convertTo(out8, CV_8UC3, 255.0);
    return out8;
}

// slight global color cast, constant for the dataset plus tiny per-image jitter
cv::Mat apply_mild(const cv::Mat& base, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> jitter(-2, 2);
    const int db = 6 + jitter(rng), dg = -8 + jitter(rng), dr = 10 + jitter(rng);
    cv::Mat out;
    cv::add(base, cv::Scalar(db, dg, dr), out);  // saturating on 8-bit, BGR order
    return out;
}

// posterize + saturation boost + sensor-like noise
cv::Mat apply_strong(const cv::Mat& base, std::mt19937_64& rng) {
    const int levels = 5;
    const float step = 255.0f / (levels - 1);
    cv::Mat out(base.size(), CV_8UC3);
    std::normal_distribution<float> noise(0.0f, 8.0f);
    for (int y = 0; y < base.rows; ++y) {
        for (int x = 0; x < base.cols; ++x) {
            const cv::Vec3b& px = base.at<cv::Vec3b>(y, x);
            const float gray = 0.114f * px[0] + 0.587f * px[1] + 0.299f * px[2];
            cv::Vec3b& dst = out.at<cv::Vec3b>(y, x);
            for (int c = 0; c < 3; ++c) {
                float v = std::round(px[c] / step) * step;          // posterize
                v = gray + 1.6f * (v - gray);                       // saturation boost
                v += noise(rng);                                    // sensor noise
                dst[c] = cv::saturate_cast<uchar>(v);
            }
        }
    }
    return out;
}

void write_manifest_line(std::ofstream& out, const std::filesystem::path& img,
                         const std::string& dataset_id, const std::string& realism,
                         const std::string& scene_id) {
    nlohmann::json j{{"path", img.string()},
                     {"dataset_id", dataset_id},
                     {"realism", realism},
                     {"scene_id", scene_id}};
    out << j.dump() << "\n";
}

}  // namespace

ToyCorpusResult generate_toy_corpus(const ToyCorpusConfig& config) {
    if (config.scenes < 1) throw ValidationError("toy corpus needs at least one scene");
    if (config.image_size < 16) throw ValidationError("toy corpus image size too small");

    const auto root = config.out_dir;
    for (const char* sub : {"real", "mild", "strong"})
        std::filesystem::create_directories(root / sub);

    std::ofstream real_manifest(root / "toy_real.jsonl");
    std::ofstream mild_manifest(root / "toy_mild.jsonl");
    std::ofstream strong_manifest(root / "toy_strong.jsonl");
    if (!real_manifest || !mild_manifest || !strong_manifest)
        throw ValidationError("cannot write toy manifests under " + root.string());

    char name[32];
    for (int s = 0; s < config.scenes; ++s) {
        std::snprintf(name, sizeof(name), "scene_%04d", s);
        std::mt19937_64 scene_rng(mix(config.seed, static_cast<uint64_t>(s) + 1));
        cv::Mat base = render_scene(config.image_size, scene_rng);

        std::mt19937_64 mild_rng(mix(config.seed ^ 0x3141592653ull, static_cast<uint64_t>(s) + 1));
        std::mt19937_64 strong_rng(mix(config.seed ^ 0x2718281828ull, static_cast<uint64_t>(s) + 1));
        cv::Mat mild = apply_mild(base, mild_rng);
        cv::Mat strong = apply_strong(base, strong_rng);

        const auto real_path = root / "real" / (std::string(name) + ".png");
        const auto mild_path = root / "mild" / (std::string(name) + ".png");
        const auto strong_path = root / "strong" / (std::string(name) + ".png");
        if (!cv::imwrite(real_path.string(), base) || !cv::imwrite(mild_path.string(), mild) ||
            !cv::imwrite(strong_path.string(), strong))
            throw ValidationError("failed writing toy corpus images under " + root.string());

        write_manifest_line(real_manifest, real_path, "toy_real", "real", name);
        write_manifest_line(mild_manifest, mild_path, "toy_mild", "synthetic", name);
        write_manifest_line(strong_manifest, strong_path, "toy_strong", "synthetic", name);
    }

    return {root / "toy_real.jsonl", root / "toy_mild.jsonl", root / "toy_strong.jsonl"};
}

}  // namespace sedd
