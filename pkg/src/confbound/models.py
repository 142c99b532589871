"""Score-producing binary classifiers of the form sgn(<phi(x), w> + b).

``score`` always returns the projection <phi(x), w> *without* the bias, so
that a calibrator can own the decision threshold. ``predict`` adds the bias
back and maps ties (score + b == 0) to +1.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels
from .metrics import METRICS, confusion

MODEL_MAGIC = "confbound-model"
MODEL_VERSION = "v1"
LINEAR_KINDS = ("logreg", "linear_svm")


class DivergenceError(ArithmeticError):
    """Training produced a non-finite loss or coefficients."""


@dataclass(frozen=True)
class LinearModel:
    w: np.ndarray
    b: float
    kind: str = "logreg"

    def score(self, X):
        X = _as_matrix(X, self.w.shape[0])
        return X @ self.w

    def predict(self, X):
        return np.where(self.score(X) + self.b >= 0.0, 1, -1)


@dataclass(frozen=True)
class KernelModel:
    support_points: np.ndarray
    dual_coefs: np.ndarray
    gamma: float
    b: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.dual_coefs.shape[0] < 1:
            raise ValueError("a kernel model needs at least one support point")

    def score(self, X):
        X = _as_matrix(X, self.support_points.shape[1])
        return rbf_kernel(X, self.support_points, self.gamma) @ self.dual_coefs

    def predict(self, X):
        return np.where(self.score(X) + self.b >= 0.0, 1, -1)


def score(model, X):
    return model.score(X)


def predict(model, X):
    return model.predict(X)


def _as_matrix(X, dim):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != dim:
        raise ValueError(f"model expects {dim} features, got {X.shape[1]}")
    return X


def rbf_kernel(A, B, gamma):
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 500
    reg_strength: float = 1e-4
    seed: int = 0
    sample_weights: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.reg_strength < 0:
            raise ValueError("reg_strength must be non-negative")


def balanced_sample_weights(labels):
    """Weight N / (2 * N_c) for every sample of class c."""
    y = np.asarray(labels)
    n = y.shape[0]
    n_pos = int((y > 0).sum())
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("balanced weights need both classes present")
    return np.where(y > 0, n / (2.0 * n_pos), n / (2.0 * n_neg))


def _weights(cfg, n):
    if cfg.sample_weights is None:
        return np.ones(n)
    sw = np.asarray(cfg.sample_weights, dtype=float)
    if sw.shape != (n,):
        raise ValueError(f"sample_weights has shape {sw.shape}, expected ({n},)")
    if (sw < 0).any() or sw.sum() <= 0:
        raise ValueError("sample_weights must be non-negative with a positive sum")
    return sw


def logistic_objective(w, b, X, y, sample_weights, reg_strength):
    """Weighted mean logistic loss plus (reg/2)*||w||^2 (bias unpenalised)."""
    z = X @ w + b
    sw = sample_weights
    return float(sw @ np.logaddexp(0.0, -y * z) / sw.sum() + 0.5 * reg_strength * w @ w)


def hinge_objective(w, b, X, y, sample_weights, reg_strength):
    z = X @ w + b
    sw = sample_weights
    return float(sw @ np.maximum(0.0, 1.0 - y * z) / sw.sum() + 0.5 * reg_strength * w @ w)


def train_logreg(train, cfg=TrainConfig()):
    """Full-batch gradient descent on the L2-regularised logistic loss from w=0, b=0."""
    train.require_both_classes()
    X, y = train.features, train.labels.astype(float)
    sw = _weights(cfg, len(y))
    total = sw.sum()
    w = np.zeros(X.shape[1])
    b = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(cfg.epochs):
            z = X @ w + b
            # d/dz log(1 + exp(-y z)) = -y * sigmoid(-y z)
            g = -y * np.exp(-np.logaddexp(0.0, y * z)) * sw / total
            w = w - cfg.learning_rate * (X.T @ g + cfg.reg_strength * w)
            b = b - cfg.learning_rate * g.sum()
            if not (np.isfinite(w).all() and np.isfinite(b)):
                raise DivergenceError("logistic regression diverged; lower the learning rate")
    loss = logistic_objective(w, b, X, y, sw, cfg.reg_strength)
    if not np.isfinite(loss):
        raise DivergenceError("non-finite logistic loss; lower the learning rate")
    return LinearModel(w, float(b), "logreg")


def train_linear_svm(train, cfg=TrainConfig()):
    """Full-batch subgradient descent on the weighted hinge loss, step lr / t."""
    train.require_both_classes()
    X, y = train.features, train.labels.astype(float)
    sw = _weights(cfg, len(y))
    total = sw.sum()
    w = np.zeros(X.shape[1])
    b = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(1, cfg.epochs + 1):
            viol = y * (X @ w + b) < 1.0
            g = np.where(viol, -y * sw, 0.0) / total
            eta = cfg.learning_rate / t
            w = w - eta * (X.T @ g + cfg.reg_strength * w)
            b = b - eta * g.sum()
            if not (np.isfinite(w).all() and np.isfinite(b)):
                raise DivergenceError("linear SVM diverged; lower the learning rate")
    return LinearModel(w, float(b), "linear_svm")


def train_rbf_svm(train, cfg=TrainConfig(), gamma=1.0):
    """Kernel Pegasos over seeded per-epoch permutations.

    The step size is 1 / (reg_strength * t), so ``learning_rate`` is unused.
    The bias comes from augmenting the kernel with a constant 1 and is
    therefore (mildly) regularised along with the dual coefficients.
    """
    train.require_both_classes()
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if not cfg.reg_strength > 0:
        raise ValueError("kernel SVM training needs reg_strength > 0")
    X, y = train.features, train.labels.astype(float)
    n = len(y)
    sw = _weights(cfg, n)
    gram = rbf_kernel(X, X, gamma) + 1.0
    rng = np.random.default_rng(cfg.seed)
    perms = np.stack([rng.permutation(n) for _ in range(cfg.epochs)]).astype(np.int64)
    alpha = kernels.pegasos_alphas(gram, y, sw, perms, float(cfg.reg_strength))
    beta = alpha * y / (cfg.reg_strength * cfg.epochs * n)
    if not np.isfinite(beta).all():
        raise DivergenceError("non-finite dual coefficients")
    nz = np.flatnonzero(beta)
    return KernelModel(X[nz].copy(), beta[nz], float(gamma), float(beta.sum()))


def train_model(kind, train, cfg=TrainConfig(), gamma=None):
    if kind == "logreg":
        return train_logreg(train, cfg)
    if kind == "linear_svm":
        return train_linear_svm(train, cfg)
    if kind == "rbf_svm":
        return train_rbf_svm(train, cfg, 1.0 if gamma is None else gamma)
    raise ValueError(f"unknown model kind {kind!r}")


def stratified_folds(labels, folds, seed=0):
    """Fold id per sample; each class is shuffled then dealt round-robin."""
    y = np.asarray(labels)
    fold_of = np.empty(y.shape[0], dtype=np.int64)
    rng = np.random.default_rng(seed)
    for cls in (-1, 1):
        idx = rng.permutation(np.flatnonzero(y == cls))
        fold_of[idx] = np.arange(idx.shape[0]) % folds
    return fold_of


def grid_search_cv(train, grid, folds=5, metric="g_mean", kind="logreg", seed=0):
    """Return the (cfg, gamma) grid entry (the object itself) with the best mean validation metric.

    Ties go to the earliest grid point. A grid point whose training diverges
    scores -inf.
    """
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if not grid:
        raise ValueError("empty hyper-parameter grid")
    metric_fn = METRICS[metric]
    fold_of = stratified_folds(train.labels, folds, seed)
    for f in range(folds):
        fold_labels = train.labels[fold_of == f]
        if not ((fold_labels > 0).any() and (fold_labels < 0).any()):
            raise ValueError(
                f"fold {f} lacks a class; too few minority samples for {folds} folds"
            )
    best, best_score = None, -np.inf
    for point in grid:
        cfg, gamma = point
        if cfg.sample_weights is not None:
            raise ValueError("grid configs must not carry sample weights")
        scores = []
        for f in range(folds):
            tr = train.subset(np.flatnonzero(fold_of != f))
            va = train.subset(np.flatnonzero(fold_of == f))
            try:
                model = train_model(kind, tr, cfg, gamma)
            except DivergenceError:
                scores.append(-np.inf)
                break
            scores.append(metric_fn(confusion(va.labels, model.predict(va.features))))
        mean = float(np.mean(scores))
        if best is None or mean > best_score:
            best, best_score = point, mean
    return best


def save_model(model, path):
    """Write the flat text format: a header line, then whitespace-separated numbers."""
    lines = []
    if isinstance(model, LinearModel):
        lines.append(f"{MODEL_MAGIC} {MODEL_VERSION} linear {model.w.shape[0]} {model.kind}")
        lines.append(" ".join(repr(float(v)) for v in (*model.w, model.b)))
    elif isinstance(model, KernelModel):
        m, d = model.support_points.shape
        lines.append(f"{MODEL_MAGIC} {MODEL_VERSION} rbf {m} {d}")
        lines.append(f"{float(model.gamma)!r} {float(model.b)!r}")
        for c, x in zip(model.dual_coefs, model.support_points):
            lines.append(" ".join(repr(float(v)) for v in (c, *x)))
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path):
    text = Path(path).read_text(encoding="utf-8").split("\n")
    head = text[0].split()
    if len(head) < 4 or head[0] != MODEL_MAGIC:
        raise ValueError(f"{path}: not a model file")
    if head[1] != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model format version {head[1]!r}")
    nums = np.array(" ".join(text[1:]).split(), dtype=float)
    if head[2] == "linear":
        d = int(head[3])
        if nums.shape[0] != d + 1:
            raise ValueError(f"{path}: expected {d + 1} numbers, found {nums.shape[0]}")
        kind = head[4] if len(head) > 4 else "logreg"
        return LinearModel(nums[:d], float(nums[d]), kind)
    if head[2] == "rbf":
        m, d = int(head[3]), int(head[4])
        if nums.shape[0] != 2 + m * (d + 1):
            raise ValueError(f"{path}: truncated kernel model")
        rows = nums[2:].reshape(m, d + 1)
        return KernelModel(rows[:, 1:].copy(), rows[:, 0].copy(), float(nums[0]), float(nums[1]))
    raise ValueError(f"{path}: unknown model kind {head[2]!r}")
