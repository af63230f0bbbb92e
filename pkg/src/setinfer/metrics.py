"""Evaluation metrics: macro F1 for classification, raw-unit RMSE."""

from __future__ import annotations

import numpy as np

from .errors import DataError


def metric_f1(truths, preds, n_classes: int | None = None) -> float:
    """Macro-averaged F1 over class indices.

    Classes averaged over: range(n_classes) when given, else the union
    of labels present in truths and preds. A class with zero precision
    and recall contributes 0.
    """
    truths = np.asarray(list(truths), dtype=int)
    preds = np.asarray(list(preds), dtype=int)
    if truths.size == 0:
        raise DataError("metric_f1 needs at least one pair")
    if truths.shape != preds.shape:
        raise DataError(
            f"metric_f1 length mismatch: {truths.shape} vs {preds.shape}"
        )
    if n_classes is None:
        classes = np.union1d(truths, preds)
    else:
        classes = np.arange(n_classes)
    scores = []
    for c in classes:
        tp = int(np.sum((preds == c) & (truths == c)))
        fp = int(np.sum((preds == c) & (truths != c)))
        fn = int(np.sum((preds != c) & (truths == c)))
        denom = 2 * tp + fp + fn
        scores.append(2.0 * tp / denom if denom else 0.0)
    return float(np.mean(scores))


def metric_rmse(truths, preds) -> float:
    """Root mean squared error in the units the values came in (raw)."""
    truths = np.asarray(list(truths), dtype=float)
    preds = np.asarray(list(preds), dtype=float)
    if truths.size == 0:
        raise DataError("metric_rmse needs at least one pair")
    if truths.shape != preds.shape:
        raise DataError(
            f"metric_rmse length mismatch: {truths.shape} vs {preds.shape}"
        )
    return float(np.sqrt(np.mean((truths - preds) ** 2)))
