// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>

#include "sedd/manifest.hpp"
#include "sedd/tensor.hpp"

namespace sedd {

enum class ResizePolicy { kResize, kCenterCrop, kResizeThenCrop };

std::string to_string(ResizePolicy p);
ResizePolicy resize_policy_from_string(const std::string& s);

struct PreprocessSpec {
    int target_height = 224;
    int target_width = 224;
    // Shorter-side size used by the resize_then_crop policy.
    int resize_shorter = 256;
    // Per-channel statistics of the backbone's pretraining corpus.
    std::array<double, 3> channel_means = {0.485, 0.456, 0.406};
    std::array<double, 3> channel_stds = {0.229, 0.224, 0.225};
    ResizePolicy resize_policy = ResizePolicy::kResizeThenCrop;

    void validate() const;
};

// Decodes the record's image and returns a (3, target_height, target_width)
// tensor with values (pixel/255 - mean) / std, channels in RGB order.
Tensor decode_and_preprocess(const ImageRecord& record, const PreprocessSpec& spec);

// Same contract, but on an already-decoded 8-bit RGB buffer (HxWx3,
// row-major). Used by tests and the toy-corpus pipeline.
Tensor preprocess_rgb8(const unsigned char* rgb, int height, int width,
                       const PreprocessSpec& spec);

}  // namespace sedd
