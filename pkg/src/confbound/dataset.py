"""Binary-labelled tabular data: loading, scaling, synthesis and splitting.

Labels are always -1 (majority / negative) or +1 (minority / positive).
"""
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np

log = logging.getLogger(__name__)

MISSING_TOKENS = frozenset({"", "?", "na", "nan", "null"})


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: Tuple[str, ...] = ()
    n_dropped: int = field(default=0, compare=False)

    def __post_init__(self):
        X = np.array(self.features, dtype=float, ndmin=2)
        if X.size == 0:
            X = X.reshape(0, len(self.feature_names))
        y = np.asarray(self.labels).astype(np.int64).ravel()
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if not np.isin(y, (-1, 1)).all():
            raise ValueError("labels must be -1 or +1")
        if not np.isfinite(X).all():
            raise ValueError("features contain missing or non-finite values")
        names = tuple(self.feature_names) or tuple(f"x{i}" for i in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise ValueError(f"{len(names)} feature names for {X.shape[1]} columns")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", names)

    def __len__(self):
        return self.labels.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def class_counts(self):
        """(n_neg, n_pos)."""
        return int((self.labels < 0).sum()), int((self.labels > 0).sum())

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.feature_names)

    def require_both_classes(self):
        n_neg, n_pos = self.class_counts()
        if n_neg == 0 or n_pos == 0:
            raise ValueError(f"both classes required, got {n_neg} negative / {n_pos} positive")


def load_csv(path, label_column, positive_label, drop_columns=()):
    """Read a headed, comma-separated numeric table.

    Rows with any missing cell are dropped (the count is logged and kept on
    ``Dataset.n_dropped``). ``positive_label`` maps to +1, every other label
    value to -1. Columns named in ``drop_columns`` are discarded first.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if label_column not in header:
            raise ValueError(f"missing label column {label_column!r} in {path}")
        unknown = set(drop_columns) - set(header)
        if unknown:
            raise ValueError(f"cannot drop unknown columns: {sorted(unknown)}")
        label_at = header.index(label_column)
        keep = [i for i, h in enumerate(header) if i != label_at and h not in drop_columns]

        rows, labels, dropped = [], [], 0
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            cells = [row[i].strip() for i in keep]
            label = row[label_at].strip()
            if label.lower() in MISSING_TOKENS or any(c.lower() in MISSING_TOKENS for c in cells):
                dropped += 1
                continue
            try:
                rows.append([float(c) for c in cells])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric cell ({exc})") from None
            labels.append(1 if label == str(positive_label) else -1)

    if dropped:
        log.info("dropped %d row(s) with missing values from %s", dropped, path)
    if not rows:
        raise ValueError(f"{path}: zero rows after dropping missing values")
    y = np.array(labels)
    if len(np.unique(y)) < 2:
        raise ValueError(f"{path}: only one class present after loading")
    X = np.array(rows, dtype=float).reshape(len(rows), len(keep))
    return Dataset(X, y, tuple(header[i] for i in keep), n_dropped=dropped)


def save_csv(d, path, label_column="label"):
    """Write ``d`` with labels as the strings ``1`` / ``-1``."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(d.feature_names) + [label_column])
        for x, y in zip(d.features, d.labels):
            w.writerow([repr(float(v)) for v in x] + [str(int(y))])


@dataclass(frozen=True)
class ScaleParams:
    minimum: np.ndarray
    maximum: np.ndarray


def fit_scale(d):
    if len(d) == 0:
        raise ValueError("cannot fit scaling on an empty dataset")
    return ScaleParams(d.features.min(axis=0), d.features.max(axis=0))


def apply_scale(d, p):
    """Affine map sending the fitted min/max to -1/+1; constant features go to 0."""
    span = p.maximum - p.minimum
    const = span == 0
    safe = np.where(const, 1.0, span)
    X = 2.0 * (d.features - p.minimum) / safe - 1.0
    X[:, const] = 0.0
    return Dataset(X, d.labels, d.feature_names)


@dataclass(frozen=True)
class SyntheticSpec:
    mu: Tuple[float, ...]
    n_neg: int
    n_pos: int
    seed: int = 0

    def __post_init__(self):
        if self.n_neg < 1 or self.n_pos < 1:
            raise ValueError("n_neg and n_pos must be >= 1")


def gen_gaussian(s):
    """Negatives from N(-mu, I), positives from N(+mu, I); negatives first."""
    mu = np.asarray(s.mu, dtype=float)
    rng = np.random.default_rng(s.seed)
    neg = rng.standard_normal((s.n_neg, mu.size)) - mu
    pos = rng.standard_normal((s.n_pos, mu.size)) + mu
    y = np.concatenate([-np.ones(s.n_neg), np.ones(s.n_pos)])
    return Dataset(np.vstack([neg, pos]), y)


def gen_medical_like(n_neg=500, n_pos=268, n_features=8, seed=2024):
    """Two-component Gaussian mixture per class, loosely shaped like a clinical table.

    Used to build the bundled ``medical_like.csv`` fixture.
    """
    rng = np.random.default_rng(seed)
    centres_neg = rng.normal(0.0, 1.0, size=(2, n_features))
    shift = rng.normal(0.0, 1.0, size=n_features)
    shift *= 1.6 / np.linalg.norm(shift)
    centres_pos = centres_neg + shift
    scales = rng.uniform(0.5, 2.0, size=n_features) * 10.0
    offsets = rng.uniform(-50, 150, size=n_features)

    def draw(centres, n):
        comp = rng.integers(0, 2, size=n)
        return centres[comp] + rng.standard_normal((n, n_features))

    X = np.vstack([draw(centres_neg, n_neg), draw(centres_pos, n_pos)]) * scales + offsets
    y = np.concatenate([-np.ones(n_neg), np.ones(n_pos)])
    names = tuple(f"f{i}" for i in range(n_features))
    return Dataset(np.round(X, 4), y, names)


Count = Union[int, float]


@dataclass(frozen=True)
class SplitSpec:
    """Per-class training counts; a float in (0, 1) is read as a fraction."""

    train_neg: Count
    train_pos: Count
    seed: int = 0


def _resolve(count, available):
    if isinstance(count, float) and 0.0 < count < 1.0:
        return int(round(count * available))
    return int(count)


def split_indices(d, s) -> Tuple[np.ndarray, np.ndarray]:
    """Row indices (train, test): per-class sampling without replacement."""
    neg_idx = np.flatnonzero(d.labels < 0)
    pos_idx = np.flatnonzero(d.labels > 0)
    k_neg = _resolve(s.train_neg, len(neg_idx))
    k_pos = _resolve(s.train_pos, len(pos_idx))
    for name, k, pool in (("negative", k_neg, neg_idx), ("positive", k_pos, pos_idx)):
        if k < 0 or k > len(pool):
            raise ValueError(f"requested {k} {name} training rows, only {len(pool)} available")
    rng = np.random.default_rng(s.seed)
    neg_perm = rng.permutation(neg_idx)
    pos_perm = rng.permutation(pos_idx)
    train = np.sort(np.concatenate([neg_perm[:k_neg], pos_perm[:k_pos]]))
    test = np.sort(np.concatenate([neg_perm[k_neg:], pos_perm[k_pos:]]))
    return train, test


def stratified_split(d, s):
    """Split ``d`` into (train, test); the test set is everything not sampled."""
    train, test = split_indices(d, s)
    return d.subset(train), d.subset(test)


def bundled_path(name: str) -> Path:
    return Path(__file__).with_name("data") / name


def load_bundled(name="medical_like.csv", drop_columns: Sequence[str] = ()) -> Dataset:
    return load_csv(bundled_path(name), "label", "1", drop_columns)
