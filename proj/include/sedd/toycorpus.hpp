// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

namespace sedd {

// Procedural desk-scale corpus: photo-like "real" textures plus two style
// clones of every scene — "mild" (slight global color shift) and "strong"
// (posterize + saturation boost + additive noise). Scene content is shared
// across the three datasets via scene_id, so only the rendering style
// separates them.
struct ToyCorpusConfig {
    int scenes = 300;
    int image_size = 128;
    uint64_t seed = 0;
    std::filesystem::path out_dir;
};

struct ToyCorpusResult {
    std::filesystem::path real_manifest;
    std::filesystem::path mild_manifest;
    std::filesystem::path strong_manifest;
};

ToyCorpusResult generate_toy_corpus(const ToyCorpusConfig& config);

}  // namespace sedd
