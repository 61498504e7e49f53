// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0
//
// Generates the procedural toy corpus (real + mild + strong style clones).

#include <CLI11.hpp>
#include <iostream>

#include "sedd/errors.hpp"
#include "sedd/toycorpus.hpp"

int main(int argc, char** argv) {
    CLI::App app{"procedural toy corpus generator"};
    sedd::ToyCorpusConfig config;
    std::string out_dir = "toy_corpus";
    int64_t seed = 0;
    app.add_option("--out-dir", out_dir, "corpus destination directory");
    app.add_option("--scenes", config.scenes, "number of shared scenes");
    app.add_option("--size", config.image_size, "square image size in pixels");
    app.add_option("--seed", seed, "generator seed");
    CLI11_PARSE(app, argc, argv);

    config.out_dir = out_dir;
    config.seed = static_cast<uint64_t>(seed);
    try {
        sedd::ToyCorpusResult result = sedd::generate_toy_corpus(config);
        std::cout << "manifests:\n  " << result.real_manifest.string() << "\n  "
                  << result.mild_manifest.string() << "\n  "
                  << result.strong_manifest.string() << "\n";
    } catch (const sedd::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
