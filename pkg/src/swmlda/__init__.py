"""Saliency-based weighted multi-label linear discriminant analysis.

Per-class saliency weights from six prior forms, weighted scatter matrices,
a discriminant projection, ML-KNN classification and the five standard
multi-label metrics.
"""

__version__ = "0.1.0"

from .data import (MultiLabelDataset, StandardizationStats, apply_standardizer,  # noqa: E402
                   fit_standardizer, load_arff, load_csv, write_csv)
from .metrics import MetricsReport, evaluate  # noqa: E402
from .mlknn import mlknn_fit, mlknn_predict  # noqa: E402
from .priors import baseline_weight_matrix, compute_priors  # noqa: E402
from .projection import fit_discriminant, fit_projection, scatter_matrices, transform  # noqa: E402
from .saliency import pse_solve, saliency_weights  # noqa: E402

__all__ = [
    "MultiLabelDataset", "StandardizationStats", "apply_standardizer", "fit_standardizer",
    "load_arff", "load_csv", "write_csv", "MetricsReport", "evaluate", "mlknn_fit",
    "mlknn_predict", "baseline_weight_matrix", "compute_priors", "fit_discriminant",
    "fit_projection", "scatter_matrices", "transform", "pse_solve", "saliency_weights",
]
