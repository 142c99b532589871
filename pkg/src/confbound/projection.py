"""Per-class statistics of classifier scores in the one-dimensional projected space.

Class 1 is the negative (majority) class and class 2 the positive (minority)
class. Statistics are reported in an *oriented* score space in which the
class-1 mean lies below the class-2 mean.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import kernels

CLASS_LABEL = {1: -1, 2: 1}


@dataclass(frozen=True)
class Projection:
    """Scores, labels and slack (excluded) flags for a set of samples."""

    scores: np.ndarray
    labels: np.ndarray
    excluded: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=float).ravel()
        y = np.asarray(self.labels).astype(np.int64).ravel()
        ex = np.asarray(self.excluded, dtype=bool).ravel()
        if not (s.shape == y.shape == ex.shape):
            raise ValueError("scores, labels and excluded must have equal length")
        if not np.isin(y, (-1, 1)).all():
            raise ValueError("labels must be -1 or +1")
        for a in (s, y, ex):
            a.flags.writeable = False
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "excluded", ex)

    @classmethod
    def from_scores(cls, scores, labels):
        scores = np.asarray(scores, dtype=float)
        return cls(scores, labels, np.zeros(scores.shape[0], dtype=bool))

    def __len__(self):
        return self.scores.shape[0]

    def with_excluded(self, indices):
        ex = np.zeros(len(self), dtype=bool)
        ex[np.asarray(indices, dtype=np.int64)] = True
        return Projection(self.scores, self.labels, ex)

    def class_indices(self, class_id, included_only=True):
        mask = self.labels == CLASS_LABEL[class_id]
        if included_only:
            mask &= ~self.excluded
        return np.flatnonzero(mask)


@dataclass(frozen=True)
class ClassStats:
    n_included: int
    proj_mean: float
    support: float


@dataclass(frozen=True)
class ProjectionStats:
    class1: ClassStats
    class2: ClassStats
    d_hat: float
    orientation: int = 1


def project(model, d):
    """Scores of ``d`` under ``model`` (bias excluded), nothing excluded yet."""
    if len(d) == 0:
        return Projection.from_scores(np.empty(0), np.empty(0, dtype=np.int64))
    return Projection.from_scores(model.score(d.features), d.labels)


def orientation_of(p):
    """+1 when the included positives score above the included negatives on average."""
    return -1 if _mean(p.scores[p.class_indices(1)]) > _mean(p.scores[p.class_indices(2)]) else 1


def _mean(s):
    # correctly rounded, hence independent of sample order
    return math.fsum(s) / s.shape[0]


def _class_stats(s):
    mean = _mean(s)
    return ClassStats(int(s.shape[0]), mean, float(np.abs(s - mean).max()))


def compute_stats(p, orientation=None):
    """Means, supports and inter-mean distance over the included samples.

    With ``orientation=None`` the sign is chosen so that class 1 sits below
    class 2; pass a sign to hold it fixed.
    """
    idx1, idx2 = p.class_indices(1), p.class_indices(2)
    for cid, idx in ((1, idx1), (2, idx2)):
        if idx.shape[0] < 2:
            raise ValueError(f"class {cid} has {idx.shape[0]} included samples; need >= 2")
    if orientation is None:
        orientation = orientation_of(p)
    c1 = _class_stats(orientation * p.scores[idx1])
    c2 = _class_stats(orientation * p.scores[idx2])
    return ProjectionStats(c1, c2, c2.proj_mean - c1.proj_mean, int(orientation))


def side_for(class_id, orientation):
    """Signed-deviation direction that faces the other class in raw score space."""
    return orientation * (1 if class_id == 1 else -1)


def exclusion_order(p, class_id, max_len=None, side_aware=False, orientation=None):
    """Global indices of ``class_id`` samples in greedy exclusion order.

    Each step drops the included sample farthest from the *current* mean of
    the still-included samples (lowest index on ties), then recomputes the
    mean. At least two samples are always left in. With ``side_aware`` only
    the deviation towards the other class counts.
    """
    idx = p.class_indices(class_id)
    room = max(idx.shape[0] - 2, 0)
    length = room if max_len is None else min(int(max_len), room)
    if length == 0:
        return np.empty(0, dtype=np.int64)
    s = np.ascontiguousarray(p.scores[idx])
    side = 0
    if side_aware:
        side = side_for(class_id, orientation_of(p) if orientation is None else orientation)
    local = kernels.greedy_exclusion_order(s, math.fsum(s), length, side)
    return idx[local]
