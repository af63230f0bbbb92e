"""Metric definitions, pinned against scikit-learn's implementations."""

import numpy as np
import pytest
from sklearn.metrics import f1_score

from setinfer.errors import DataError
from setinfer.metrics import metric_f1, metric_rmse


def test_identical_predictions():
    assert metric_f1([0, 1, 1, 0], [0, 1, 1, 0]) == 1.0
    assert metric_rmse([1.5, 2.5], [1.5, 2.5]) == 0.0


def test_binary_hand_example():
    # truths [1,0,1,0], preds [1,1,1,1]: class 1 has P=0.5, R=1.0 so
    # F1 = 2/3; class 0 has F1 = 0; macro = 1/3
    truths, preds = [1, 0, 1, 0], [1, 1, 1, 1]
    got = metric_f1(truths, preds)
    assert got == pytest.approx(1 / 3, abs=1e-12)
    assert got == pytest.approx(
        f1_score(truths, preds, average="macro", zero_division=0), abs=1e-12
    )


@pytest.mark.parametrize("seed", range(5))
def test_matches_sklearn_macro(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 5))
    truths = rng.integers(0, k, size=60)
    preds = rng.integers(0, k, size=60)
    assert metric_f1(truths, preds, n_classes=k) == pytest.approx(
        f1_score(truths, preds, labels=list(range(k)), average="macro",
                 zero_division=0),
        abs=1e-12,
    )


def test_n_classes_padding():
    # class 2 never appears: counts as 0 in the macro mean
    with_pad = metric_f1([0, 1], [0, 1], n_classes=3)
    assert with_pad == pytest.approx(2 / 3, abs=1e-12)


def test_rmse_offset():
    truths = [10.0, 20.0, 30.0]
    preds = [t + 1 for t in truths]
    assert metric_rmse(truths, preds) == pytest.approx(1.0, abs=1e-12)


def test_errors():
    with pytest.raises(DataError):
        metric_f1([], [])
    with pytest.raises(DataError):
        metric_f1([0, 1], [0])
    with pytest.raises(DataError):
        metric_rmse([], [])
    with pytest.raises(DataError):
        metric_rmse([0.0], [0.0, 1.0])
