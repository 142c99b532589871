"""Rebalancing methods used as comparison points: SMOTE, cost-scan thresholding and
Bayes minimum risk over Platt-calibrated scores.

Balanced sample weights live in :mod:`confbound.models`.
"""
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset


@dataclass(frozen=True)
class CostPair:
    cost_fp: float
    cost_fn: float

    def __post_init__(self):
        if not (self.cost_fp > 0 and self.cost_fn > 0):
            raise ValueError("misclassification costs must be positive")


def _counts(labels):
    y = np.asarray(labels)
    n_pos = int((y > 0).sum())
    n_neg = int((y < 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("both classes must be present")
    return n_neg, n_pos


def imbalance_costs(labels):
    """False positives cost 1, false negatives cost N_neg / N_pos."""
    n_neg, n_pos = _counts(labels)
    return CostPair(1.0, n_neg / n_pos)


def interpolate(base, neighbour, lam):
    return base + lam * (neighbour - base)


def smote(train, k=5, seed=0):
    """Oversample the smaller class to parity by interpolating towards its k nearest peers.

    Each synthetic point picks a uniformly random base sample of the smaller
    class, one of that sample's ``k`` nearest same-class neighbours (``k`` is
    clamped to class size - 1) and a uniform interpolation weight. The
    original rows come first in the output, unchanged.
    """
    n_neg, n_pos = _counts(train.labels)
    minority = 1 if n_pos <= n_neg else -1
    X_min = train.features[train.labels == minority]
    n_min = X_min.shape[0]
    if n_min < 2:
        raise ValueError("SMOTE needs at least two minority samples")
    n_new = abs(n_neg - n_pos)
    if n_new == 0:
        return train
    k = max(1, min(int(k), n_min - 1))

    sq = ((X_min[:, None, :] - X_min[None, :, :]) ** 2).sum(-1)
    np.fill_diagonal(sq, np.inf)
    neighbours = np.argsort(sq, axis=1, kind="stable")[:, :k]

    rng = np.random.default_rng(seed)
    base = rng.integers(0, n_min, size=n_new)
    pick = rng.integers(0, k, size=n_new)
    lam = rng.random(n_new)[:, None]
    synth = interpolate(X_min[base], X_min[neighbours[base, pick]], lam)

    X = np.vstack([train.features, synth])
    y = np.concatenate([train.labels, np.full(n_new, minority)])
    return Dataset(X, y, train.feature_names)


def threshold_search(scores, labels, costs):
    """Threshold minimising cost_fp*FP + cost_fn*FN on the given scores.

    Candidates are the midpoints between consecutive distinct scores plus
    -inf and +inf; a sample is predicted positive when ``score >= threshold``.
    Ties go to the larger threshold.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    _counts(y)
    u = np.unique(s)
    cand = np.concatenate([[-np.inf], 0.5 * (u[:-1] + u[1:]), [np.inf]])
    neg = np.sort(s[y < 0])
    pos = np.sort(s[y > 0])
    fp = neg.shape[0] - np.searchsorted(neg, cand, side="left")
    fn = np.searchsorted(pos, cand, side="left")
    cost = costs.cost_fp * fp + costs.cost_fn * fn
    best = np.flatnonzero(cost == cost.min())[-1]
    return float(cand[best])


_P_MIN = float(np.finfo(float).tiny)
_P_MAX = 1.0 - float(np.finfo(float).epsneg)


@dataclass(frozen=True)
class PlattParams:
    slope: float
    intercept: float

    def predict_proba(self, scores):
        f = self.slope * np.asarray(scores, dtype=float) + self.intercept
        # keep saturated tails strictly inside (0, 1)
        return np.clip(np.exp(-np.logaddexp(0.0, -f)), _P_MIN, _P_MAX)


def platt_fit(scores, labels, max_iter=100):
    """Fit p(+1 | s) = sigmoid(slope * s + intercept) by Newton's method.

    Targets are smoothed to (N+ + 1)/(N+ + 2) and 1/(N- + 2) as in Platt's
    original recipe, which keeps the fit finite on separable scores.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    n_neg, n_pos = _counts(y)
    if np.ptp(s) == 0:
        raise ValueError("cannot fit a score calibration when all scores are identical")
    t = np.where(y > 0, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))
    # centre and scale for conditioning, map back at the end
    mu, sd = s.mean(), s.std()
    x = (s - mu) / sd

    def objective(a, b):
        f = a * x + b
        return float(np.sum(np.logaddexp(0.0, f) - t * f))

    a, b = 0.0, float(np.log((n_pos + 1.0) / (n_neg + 1.0)))
    val = objective(a, b)
    for _ in range(max_iter):
        p = np.exp(-np.logaddexp(0.0, -(a * x + b)))
        r = p - t
        g = np.array([r @ x, r.sum()])
        if np.abs(g).max() < 1e-10:
            break
        w = p * (1.0 - p)
        H = np.array([[w @ (x * x), w @ x], [w @ x, w.sum()]]) + 1e-12 * np.eye(2)
        step = np.linalg.solve(H, g)
        lr = 1.0
        while lr > 1e-10:
            na, nb = a - lr * step[0], b - lr * step[1]
            nval = objective(na, nb)
            if nval <= val + 1e-4 * lr * (g @ -step):
                break
            lr *= 0.5
        else:
            break
        a, b, val = na, nb, nval
    return PlattParams(a / sd, b - a * mu / sd)


def bmr_decide(p, costs):
    """+1 where the expected cost of predicting positive is not larger: p >= c_fp/(c_fp+c_fn)."""
    cut = costs.cost_fp / (costs.cost_fp + costs.cost_fn)
    return np.where(np.asarray(p, dtype=float) >= cut, 1, -1)
