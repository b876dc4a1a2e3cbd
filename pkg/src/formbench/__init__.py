"""formbench: does semantic-segmentation preprocessing sharpen form embeddings?

The package measures how well frozen image-embedding spaces separate
fine-grained form types, with and without segmentation-mask preprocessing:
manifold reduction from scratch, k-means / leave-one-out KNN scoring on the
reductions, a batch-normalized linear probe on the full embeddings, and delta
tables comparing the masked and unmasked variants.
"""

from __future__ import annotations

from ._kernels import BACKEND as SGD_BACKEND
from .cluster import kmeans, kmeans_eval, knn_classify, knn_eval
from .dataset import (
    CellSpec,
    DatasetError,
    DatasetSpec,
    EmbeddingSet,
    LabelTable,
    MaskClass,
    ProbeConfig,
    RunConfig,
    SegMask,
    UmapParams,
    Variant,
    align,
    load_embeddings,
    load_labels,
    save_embeddings,
)
from .mask import MaskEncoding, MaskError, apply_mask, decode_mask
from .metrics import accuracy, ari, contingency, v_measure
from .pipeline import ConfigError, RunError, load_run_config, run
from .probe import ProbeModel, cross_validate, forward, loss_and_grads, train_fold
from .report import format_delta, render_csv, render_report
from .seeding import seed_derive
from .umap import FuzzyGraph, ReducedSet, fuzzy_graph, reduce_embeddings

__version__ = "0.1.0"

__all__ = [
    "SGD_BACKEND",
    "kmeans",
    "kmeans_eval",
    "knn_classify",
    "knn_eval",
    "CellSpec",
    "DatasetError",
    "DatasetSpec",
    "EmbeddingSet",
    "LabelTable",
    "MaskClass",
    "ProbeConfig",
    "RunConfig",
    "SegMask",
    "UmapParams",
    "Variant",
    "align",
    "load_embeddings",
    "load_labels",
    "save_embeddings",
    "MaskEncoding",
    "MaskError",
    "apply_mask",
    "decode_mask",
    "accuracy",
    "ari",
    "contingency",
    "v_measure",
    "ConfigError",
    "RunError",
    "load_run_config",
    "run",
    "ProbeModel",
    "cross_validate",
    "forward",
    "loss_and_grads",
    "train_fold",
    "format_delta",
    "render_csv",
    "render_report",
    "seed_derive",
    "FuzzyGraph",
    "ReducedSet",
    "fuzzy_graph",
    "reduce_embeddings",
    "__version__",
]
