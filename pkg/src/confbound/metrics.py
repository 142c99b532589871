"""Confusion counts and imbalance-aware scores with the minority class as positive.

Every 0/0 sub-ratio evaluates to 0, so degenerate one-class predictors are
penalised rather than producing NaN.
"""
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


def confusion(y_true, y_pred):
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    for name, arr in (("y_true", y_true), ("y_pred", y_pred)):
        if not np.isin(arr, (-1, 1)).all():
            raise ValueError(f"{name} contains labels other than -1/+1")
    pos, pred_pos = y_true > 0, y_pred > 0
    return Confusion(
        tp=int(np.count_nonzero(pos & pred_pos)),
        fp=int(np.count_nonzero(~pos & pred_pos)),
        tn=int(np.count_nonzero(~pos & ~pred_pos)),
        fn=int(np.count_nonzero(pos & ~pred_pos)),
    )


def _ratio(num, den):
    return num / den if den else 0.0


def _check(c):
    if c.total == 0:
        raise ValueError("metrics are undefined on an empty confusion matrix")


def accuracy(c):
    _check(c)
    return (c.tp + c.tn) / c.total


def g_mean(c):
    """sqrt(TPR * TNR), formed as one integer ratio before the root."""
    _check(c)
    den = (c.tp + c.fn) * (c.tn + c.fp)
    return math.sqrt(c.tp * c.tn / den) if den else 0.0


def f1(c):
    # 2PR/(P+R) == 2tp/(2tp+fp+fn) whenever P+R > 0, and both are 0 otherwise
    _check(c)
    return _ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn)


def tpr(c):
    return _ratio(c.tp, c.tp + c.fn)


def tnr(c):
    return _ratio(c.tn, c.tn + c.fp)


METRICS = {"accuracy": accuracy, "g_mean": g_mean, "f1": f1}
METRIC_LABELS = {"accuracy": "Accuracy", "g_mean": "G-Mean", "f1": "F1"}


def evaluate(y_true, y_pred):
    """All three scores as a dict keyed like :data:`METRICS`."""
    c = confusion(y_true, y_pred)
    return {name: fn(c) for name, fn in METRICS.items()}
