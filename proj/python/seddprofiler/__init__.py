# Copyright (c) 2025 SEDD Profiler Authors
# SPDX-License-Identifier: Apache-2.0
"""Style-embedding distribution discrepancy profiling for image datasets."""

from ._core import (  # noqa: F401
    ConfigError,
    InitError,
    NumericError,
    ParseError,
    ValidationError,
    __version__,
    batch_hard_mine,
    center_loss,
    cosine_similarity,
    decay_center_lr,
    embed_manifest,
    gaussian_kernel,
    generate_toy_corpus,
    gram_matrix,
    gram_to_vector,
    gram_vector,
    intra_class_variance,
    ntxent_loss,
    profile_run,
    sedd1,
    sedd2,
    style_center,
    total_loss,
    train_run,
    tsne_embed,
    update_centers,
    vector_to_gram,
)
