"""Longitudinal siamese 3D pipeline: synthetic cohorts, preprocessing,
model training, and feature embeddings, backed by a C++ core."""

from longsiam._core import (
    Model,
    accuracy,
    augment_image,
    crossentropy,
    downscale_spline,
    generate_cohort,
    input_affinities,
    make_subject,
    msle,
    preprocess_pair,
    read_nifti,
    set_threads,
    train_run,
    tsne,
    write_nifti,
)

__all__ = [
    "Model",
    "accuracy",
    "augment_image",
    "crossentropy",
    "downscale_spline",
    "generate_cohort",
    "input_affinities",
    "make_subject",
    "msle",
    "preprocess_pair",
    "read_nifti",
    "set_threads",
    "train_run",
    "tsne",
    "write_nifti",
]

__version__ = "0.1.0"
