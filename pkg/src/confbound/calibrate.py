"""Confidence-bound threshold calibration for a pre-trained binary scorer.

The two class supports in the projected space are inflated by
concentration bounds with confidence levels ``delta1`` / ``delta2``. The
levels are coupled by requiring the inflated supports to meet exactly, which
lets ``delta2`` be written in closed form from ``delta1``; the remaining
one-dimensional loss is minimised by a grid scan followed by golden-section
refinement. Slack exclusions (greedy, per class) relax the coupling when the
classes overlap in score space.
"""
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from . import kernels
from .bounds import confidence_factor, support_upper_bound
from .projection import ClassStats, Projection, ProjectionStats, orientation_of

# Widely separated classes push both levels far below 1e-12 at the optimum,
# so the floor only guards log(0); the deep geometric tail lets the grid see them.
DELTA_FLOOR = 1e-300
GOLDEN_TOL = 1e-10
DELTA_GRID = np.unique(
    np.concatenate([
        np.geomspace(1e-300, 1e-9, 120, endpoint=False),
        np.geomspace(1e-9, 1.0, 200),
        np.linspace(1e-3, 1.0, 200),
    ])
)
TINY = float(np.finfo(float).tiny)
DEFAULT_BUDGET_CAP = 100
RETRAIN_ADVICE = (
    "no slack budget makes the inflated supports fit between the class means; "
    "the scorer separates the classes poorly in score space, so retraining it "
    "with a cost-sensitive objective is recommended"
)


@dataclass(frozen=True)
class DeltaPair:
    delta1: float
    delta2: float

    def __post_init__(self):
        for name in ("delta1", "delta2"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name}={v} outside (0, 1]")


def _check_delta(delta1):
    if not 0.0 < delta1 <= 1.0:
        raise ValueError(f"delta1={delta1} outside (0, 1]")


def _stat_arrays(stats):
    c1, c2 = stats.class1, stats.class2
    return (
        np.array([c1.support]),
        np.array([c2.support]),
        np.array([float(c1.n_included)]),
        np.array([float(c2.n_included)]),
        np.array([stats.d_hat]),
    )


def slack_after_class1(delta1, stats):
    """Gap left for class 2 once class 1's inflated support is placed (``B``)."""
    c1, c2 = stats.class1, stats.class2
    return (
        stats.d_hat
        - c1.support
        - c1.support / math.sqrt(c1.n_included) * confidence_factor(delta1)
        - c2.support
    )


def delta2_from_delta1(delta1, stats):
    """Class-2 confidence level that makes the inflated supports meet.

    Returns ``None`` when no ``delta2`` in (0, 1] exists: the closed form is
    obtained by squaring, so without this guard it would return a spurious
    level whenever the gap ``B`` is too small for class 2.
    """
    _check_delta(delta1)
    c2 = stats.class2
    if c2.support <= 0.0:
        return None
    z = slack_after_class1(delta1, stats) * math.sqrt(c2.n_included) / c2.support - 2.0
    if z < 0.0:
        return None
    return max(math.exp(-0.5 * z * z), TINY)


def loss(deltas, n1, n2):
    """Per-class mixture of the 1/(N+1) error bound (w.p. 1-delta) and 1 (w.p. delta)."""
    total = 0.0
    for d, n in ((deltas.delta1, n1), (deltas.delta2, n2)):
        total += (1.0 - d) / (n + 1.0) + d
    return total


def loss_gradient(delta1, stats):
    """d loss / d delta1 along the coupling curve (chain rule through delta2)."""
    if not 0.0 < delta1 < 1.0:
        raise ValueError("the gradient is defined for delta1 strictly inside (0, 1)")
    d2 = delta2_from_delta1(delta1, stats)
    if d2 is None:
        raise ValueError(f"delta1={delta1} is infeasible for these statistics")
    c1, c2 = stats.class1, stats.class2
    n1, n2 = c1.n_included, c2.n_included
    z = slack_after_class1(delta1, stats) * math.sqrt(n2) / c2.support - 2.0
    u1 = math.sqrt(-2.0 * math.log(delta1))
    dd2 = -z * (math.sqrt(n2) * c1.support) / (c2.support * math.sqrt(n1) * delta1) / u1 * d2
    return n1 / (n1 + 1.0) + dd2 * n2 / (n2 + 1.0)


def coupled_width(deltas, stats):
    """Sum of both inflated supports; equals ``d_hat`` on the coupling curve."""
    c1, c2 = stats.class1, stats.class2
    return float(
        support_upper_bound(c1.support, c1.n_included, deltas.delta1)
        + support_upper_bound(c2.support, c2.n_included, deltas.delta2)
    )


@dataclass(frozen=True)
class DeltaSolution:
    deltas: DeltaPair
    loss: float


def optimize_deltas(stats):
    """Minimise the loss over delta1 with delta2 tied to it; ``None`` if infeasible.

    A grid (geometric on [1e-9, 1], uniform on [1e-3, 1], plus a sparse
    geometric tail down to 1e-300) picks the basin, golden-section search
    narrows the neighbouring bracket to a relative width of 1e-10, and a
    bisection on the analytic gradient polishes interior minima.
    """
    d1, d2, val, ok = kernels.optimize_many(
        *_stat_arrays(stats), DELTA_GRID, DELTA_FLOOR, GOLDEN_TOL
    )
    if not ok[0]:
        return None
    return DeltaSolution(DeltaPair(float(d1[0]), float(d2[0])), float(val[0]))


def threshold_from_delta(delta1, stats):
    """Oriented-space location where class 1's inflated support ends."""
    _check_delta(delta1)
    c1 = stats.class1
    return c1.proj_mean + float(support_upper_bound(c1.support, c1.n_included, delta1))


@dataclass(frozen=True)
class SlackConfig:
    """How slack exclusions are scored and allocated.

    ``budget`` is the largest total exclusion count tried (``None`` means
    ``min(n_samples, 100)``, ``"all"`` means ``n_samples``). ``allocation``
    ``"proportional"`` splits each budget in the training class ratio;
    ``"equal"`` splits it evenly.
    """

    mode: str = "binary"
    alpha: float = 1.0
    budget: Union[int, str, None] = None
    allocation: str = "proportional"
    side_aware: bool = False

    def __post_init__(self):
        if self.mode not in ("binary", "continuous"):
            raise ValueError(f"unknown slack mode {self.mode!r}")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.allocation not in ("proportional", "equal"):
            raise ValueError(f"unknown allocation {self.allocation!r}")
        if isinstance(self.budget, str) and self.budget != "all":
            raise ValueError("budget must be an integer, None or 'all'")
        if isinstance(self.budget, int) and self.budget < 0:
            raise ValueError("budget must be non-negative")

    def resolve_budget(self, n_samples):
        if self.budget is None:
            return min(n_samples, DEFAULT_BUDGET_CAP)
        if self.budget == "all":
            return n_samples
        if self.budget > n_samples:
            raise ValueError(f"budget {self.budget} exceeds the {n_samples} training samples")
        return int(self.budget)


def slack_penalty(p, stats, cfg):
    """alpha * (#excluded) in binary mode; alpha * sum of distances to own-class mean otherwise."""
    ex = np.flatnonzero(p.excluded)
    if ex.shape[0] == 0:
        return 0.0
    if cfg.mode == "binary":
        return cfg.alpha * ex.shape[0]
    o = stats.orientation
    means = np.where(p.labels[ex] < 0, stats.class1.proj_mean, stats.class2.proj_mean)
    return cfg.alpha * float(np.abs(o * p.scores[ex] - means).sum())


def split_budget(m, n1, n2, allocation="proportional"):
    """Per-class exclusion counts for total budget ``m``, each capped to leave two samples."""
    if allocation == "proportional":
        m1 = math.floor(m * n1 / (n1 + n2) + 0.5)
    else:
        m1 = m - m // 2
    m2 = m - m1
    return min(m1, n1 - 2), min(m2, n2 - 2)


@dataclass(frozen=True)
class CurvePoint:
    m: int
    m1: int
    m2: int
    loss: float
    loss_sv: float
    feasible: bool


@dataclass(frozen=True)
class CalibrationResult:
    feasible: bool
    deltas: Optional[DeltaPair]
    threshold: float
    bias_out: float
    orientation: int
    best_budget: int
    excluded: Tuple[int, ...]
    loss: float
    base_loss: float
    stats: Optional[ProjectionStats]
    curve: Tuple[CurvePoint, ...] = field(repr=False)
    advisory: str = ""

    def predict(self, scores):
        """+1 where the oriented score reaches the calibrated threshold."""
        if not self.feasible:
            raise ValueError("calibration is infeasible; no threshold to apply")
        return np.where(self.orientation * np.asarray(scores, dtype=float) >= self.threshold, 1, -1)


def _class_prefixes(s, side):
    order = kernels.greedy_exclusion_order(s, math.fsum(s), s.shape[0] - 2, side)
    means, sups, exdist = kernels.prefix_stats(s, order, math.fsum(s))
    return order, means, sups, exdist


def calibrate(p, cfg=SlackConfig()):
    """Sweep total slack budgets 0..k and keep the feasible one with the lowest penalised loss.

    Ties go to the smallest budget. Any exclusion flags already on ``p`` are
    ignored; exclusions are chosen here.
    """
    p = Projection.from_scores(p.scores, p.labels)
    idx1, idx2 = p.class_indices(1), p.class_indices(2)
    n1, n2 = idx1.shape[0], idx2.shape[0]
    if n1 < 2 or n2 < 2:
        raise ValueError(f"each class needs >= 2 samples, got {n1} / {n2}")
    k = cfg.resolve_budget(n1 + n2)
    orient = orientation_of(p)
    s1 = np.ascontiguousarray(orient * p.scores[idx1])
    s2 = np.ascontiguousarray(orient * p.scores[idx2])
    side1, side2 = (1, -1) if cfg.side_aware else (0, 0)
    ord1, mean1, sup1, ex1 = _class_prefixes(s1, side1)
    ord2, mean2, sup2, ex2 = _class_prefixes(s2, side2)

    budgets = np.arange(k + 1)
    alloc = np.array([split_budget(int(m), n1, n2, cfg.allocation) for m in budgets])
    m1, m2 = alloc[:, 0], alloc[:, 1]
    d1, d2, base, ok = kernels.optimize_many(
        sup1[m1], sup2[m2], (n1 - m1).astype(float), (n2 - m2).astype(float),
        mean2[m2] - mean1[m1], DELTA_GRID, DELTA_FLOOR, GOLDEN_TOL,
    )
    if cfg.mode == "binary":
        penalty = cfg.alpha * (m1 + m2)
    else:
        penalty = cfg.alpha * (ex1[m1] + ex2[m2])
    loss_sv = np.where(ok, base + penalty, np.inf)
    curve = tuple(
        CurvePoint(int(m), int(a), int(b), float(l), float(lsv), bool(f))
        for m, a, b, l, lsv, f in zip(budgets, m1, m2, base, loss_sv, ok)
    )

    if not ok.any():
        return CalibrationResult(
            False, None, math.nan, math.nan, orient, -1, (), math.nan, math.nan,
            None, curve, RETRAIN_ADVICE,
        )
    best = int(np.argmin(loss_sv))
    a, b = int(m1[best]), int(m2[best])
    c1 = ClassStats(n1 - a, float(mean1[a]), float(sup1[a]))
    c2 = ClassStats(n2 - b, float(mean2[b]), float(sup2[b]))
    stats = ProjectionStats(c1, c2, float(mean2[b] - mean1[a]), orient)
    deltas = DeltaPair(float(d1[best]), float(d2[best]))
    t = threshold_from_delta(deltas.delta1, stats)
    excluded = tuple(sorted(int(i) for i in np.concatenate([idx1[ord1[:a]], idx2[ord2[:b]]])))
    return CalibrationResult(
        True, deltas, t, -t, orient, best, excluded,
        float(loss_sv[best]), float(base[best]), stats, curve,
    )


def format_report(r):
    """Plain-text ``key = value`` record followed by the per-budget loss curve as CSV."""
    def num(x):
        return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))

    lines = [
        f"feasible = {'true' if r.feasible else 'false'}",
        f"delta1 = {num(r.deltas.delta1 if r.deltas else None)}",
        f"delta2 = {num(r.deltas.delta2 if r.deltas else None)}",
        f"threshold = {num(r.threshold)}",
        f"bias_out = {num(r.bias_out)}",
        f"orientation = {r.orientation}",
        f"best_budget = {r.best_budget}",
        f"loss = {num(r.loss)}",
        f"base_loss = {num(r.base_loss)}",
        f"excluded = {','.join(str(i) for i in r.excluded)}",
    ]
    if r.advisory:
        lines.append(f"advisory = {r.advisory}")
    lines.append("[curve]")
    lines.append("m,m1,m2,loss,loss_sv,feasible")
    for c in r.curve:
        lines.append(f"{c.m},{c.m1},{c.m2},{num(c.loss)},{num(c.loss_sv)},{int(c.feasible)}")
    return "\n".join(lines) + "\n"


def parse_report(text):
    """Read back the header of :func:`format_report` as a dict of parsed values."""
    out = {}
    for line in text.splitlines():
        if line.strip() == "[curve]":
            break
        if "=" not in line:
            continue
        key, _, value = (part.strip() for part in line.partition("="))
        if key == "feasible":
            out[key] = value == "true"
        elif key in ("orientation", "best_budget"):
            out[key] = int(value)
        elif key == "excluded":
            out[key] = tuple(int(v) for v in value.split(",") if v)
        elif key == "advisory":
            out[key] = value
        else:
            out[key] = float(value)
    return out
