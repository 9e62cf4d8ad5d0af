"""Talk-rating prediction toolkit.

Thin wrapper over the C++ core: rating scaling and binarization, ROC/PRF
metrics, the convex baseline solvers, synthetic-corpus generation, and the
full CLI pipeline via :func:`run_cli`.
"""

from ._core import (
    TedrateError,
    auc,
    auc_trapezoid,
    bce_value,
    binarize_by_median,
    categories,
    fit_linear,
    generate_corpus,
    num_categories,
    prf,
    run_cli,
    scale_ratings,
    tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "TedrateError",
    "auc",
    "auc_trapezoid",
    "bce_value",
    "binarize_by_median",
    "categories",
    "fit_linear",
    "generate_corpus",
    "num_categories",
    "prf",
    "run_cli",
    "scale_ratings",
    "tokenize",
]
