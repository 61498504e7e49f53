// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedd/preprocess.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace sedd {

std::string to_string(ResizePolicy p) {
    switch (p) {
        case ResizePolicy::kResize: return "resize";
        case ResizePolicy::kCenterCrop: return "center_crop";
        default: return "resize_then_crop";
    }
}

ResizePolicy resize_policy_from_string(const std::string& s) {
    if (s == "resize") return ResizePolicy::kResize;
    if (s == "center_crop") return ResizePolicy::kCenterCrop;
    if (s == "resize_then_crop") return ResizePolicy::kResizeThenCrop;
    throw ValidationError("unknown resize policy '" + s + "'");
}

void PreprocessSpec::validate() const {
    if (target_height <= 0 || target_width <= 0)
        throw ValidationError("preprocess target size must be positive");
    if (resize_shorter <= 0) throw ValidationError("resize_shorter must be positive");
    for (double s : channel_stds)
        if (!(s > 0.0)) throw ValidationError("channel_stds must be strictly positive");
}

namespace {

cv::Mat center_crop(const cv::Mat& img, int th, int tw) {
    if (img.rows < th || img.cols < tw)
        throw ValidationError("center_crop: image " + std::to_string(img.cols) + "x" +
                              std::to_string(img.rows) + " smaller than crop " +
                              std::to_string(tw) + "x" + std::to_string(th));
    const int y0 = (img.rows - th) / 2;
    const int x0 = (img.cols - tw) / 2;
    return img(cv::Rect(x0, y0, tw, th)).clone();
}

Tensor normalize_to_tensor(const cv::Mat& rgb, const PreprocessSpec& spec) {
    const int h = rgb.rows, w = rgb.cols;
    Tensor out({3, h, w});
    float* dst = out.ptr();
    std::array<float, 3> inv_std, mean;
    for (int c = 0; c < 3; ++c) {
        inv_std[c] = static_cast<float>(1.0 / spec.channel_stds[c]);
        mean[c] = static_cast<float>(spec.channel_means[c]);
    }
    for (int y = 0; y < h; ++y) {
        const unsigned char* row = rgb.ptr<unsigned char>(y);
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                const float v = static_cast<float>(row[3 * x + c]) / 255.0f;
                dst[(static_cast<size_t>(c) * h + y) * w + x] = (v - mean[c]) * inv_std[c];
            }
        }
    }
    return out;
}

Tensor apply_spec(cv::Mat rgb, const PreprocessSpec& spec) {
    spec.validate();
    const int th = spec.target_height, tw = spec.target_width;
    switch (spec.resize_policy) {
        case ResizePolicy::kResize: {
            cv::Mat resized;
            cv::resize(rgb, resized, cv::Size(tw, th), 0, 0, cv::INTER_LINEAR);
            return normalize_to_tensor(resized, spec);
        }
        case ResizePolicy::kCenterCrop:
            return normalize_to_tensor(center_crop(rgb, th, tw), spec);
        case ResizePolicy::kResizeThenCrop: {
            const double scale = static_cast<double>(spec.resize_shorter) /
                                 static_cast<double>(std::min(rgb.rows, rgb.cols));
            cv::Mat resized;
            cv::resize(rgb, resized,
                       cv::Size(std::max(tw, static_cast<int>(std::lround(rgb.cols * scale))),
                                std::max(th, static_cast<int>(std::lround(rgb.rows * scale)))),
                       0, 0, cv::INTER_LINEAR);
            return normalize_to_tensor(center_crop(resized, th, tw), spec);
        }
    }
    throw ValidationError("unhandled resize policy");
}

}  // namespace

Tensor decode_and_preprocess(const ImageRecord& record, const PreprocessSpec& spec) {
    cv::Mat bgr = cv::imread(record.path, cv::IMREAD_COLOR);
    if (bgr.empty()) throw DecodeError("failed to decode image", record.path);
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    return apply_spec(rgb, spec);
}

Tensor preprocess_rgb8(const unsigned char* rgb, int height, int width,
                       const PreprocessSpec& spec) {
    cv::Mat mat(height, width, CV_8UC3);
    std::memcpy(mat.data, rgb, static_cast<size_t>(height) * width * 3);
    return apply_spec(mat, spec);
}

}  // namespace sedd
