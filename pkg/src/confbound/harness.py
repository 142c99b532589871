"""Repeated train/test experiments comparing rebalancing methods.

One baseline model is trained per repeat. Post-hoc methods (thresholding,
BMR, the confidence-bound calibrator) reuse it; SMOTE and balanced weights
retrain. All methods of a repeat are scored on the same test split, and the
per-repeat seed is ``seed + repeat``.
"""
import csv
import hashlib
import io
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from . import baselines
from .calibrate import SlackConfig, calibrate
from .dataset import (
    SplitSpec,
    SyntheticSpec,
    apply_scale,
    fit_scale,
    gen_gaussian,
    load_csv,
    split_indices,
)
from .metrics import METRIC_LABELS, METRICS, evaluate
from .models import TrainConfig, balanced_sample_weights, grid_search_cv, train_model
from .projection import Projection

log = logging.getLogger(__name__)

METHODS = ("baseline", "smote", "bw", "bmr", "thresh", "ours-binary", "ours-continuous")
METHOD_LABELS = {
    "baseline": "Baseline",
    "smote": "SMOTE",
    "bw": "BW",
    "bmr": "BMR",
    "thresh": "Thresh",
    "ours-binary": "Our Method",
    "ours-continuous": "Our Method (continuous)",
}
CONFIG_DIR = Path(__file__).with_name("configs")


@dataclass(frozen=True)
class ExperimentConfig:
    source: str = "synthetic"
    mu: Tuple[float, ...] = (1.0, 1.0)
    train_neg: Union[int, float] = 1000
    train_pos: Union[int, float] = 10
    test_neg: int = 1000
    test_pos: int = 1000
    csv_path: Optional[str] = None
    label_col: str = "label"
    positive_label: str = "1"
    drop_cols: Tuple[str, ...] = ()
    scale: Optional[bool] = None
    model: str = "logreg"
    learning_rate: float = 0.1
    epochs: int = 500
    reg_strength: float = 1e-4
    C: Optional[float] = None
    gamma: float = 1.0
    cv_C: Tuple[float, ...] = ()
    cv_gamma: Tuple[float, ...] = ()
    cv_folds: int = 5
    cv_metric: str = "g_mean"
    methods: Tuple[str, ...] = METHODS
    repeats: int = 10
    seed: int = 0
    alpha: float = 1.0
    budget: Union[int, str, None] = None
    allocation: str = "proportional"
    side_aware: bool = False
    smote_k: int = 5
    jobs: int = 1
    output: Optional[str] = None
    format: str = "markdown"

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if not self.methods:
            raise ValueError("method list is empty")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")
        if self.source not in ("synthetic", "csv"):
            raise ValueError(f"unknown data source {self.source!r}")
        if self.source == "csv" and not self.csv_path:
            raise ValueError("csv source needs csv_path")
        if self.format not in ("markdown", "csv"):
            raise ValueError(f"unknown table format {self.format!r}")
        if self.cv_metric not in METRICS:
            raise ValueError(f"unknown metric {self.cv_metric!r}")

    @property
    def scale_features(self):
        return self.source == "csv" if self.scale is None else self.scale


def _floats(v):
    return tuple(float(x) for x in v.replace(";", ",").split(",") if x.strip())


def _strings(v):
    return tuple(x.strip() for x in v.split(",") if x.strip())


def _count(v):
    return float(v) if any(c in v for c in ".eE") else int(v)


def _bool(v):
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _optional(conv):
    def parse(v):
        return None if v.strip().lower() in ("", "none", "auto") else conv(v)

    return parse


def _budget(v):
    low = v.strip().lower()
    if low in ("", "none", "default"):
        return None
    if low == "all":
        return "all"
    return int(v)


_PARSERS = {
    "mu": _floats,
    "cv_C": _floats,
    "cv_gamma": _floats,
    "drop_cols": _strings,
    "methods": _strings,
    "train_neg": _count,
    "train_pos": _count,
    "scale": _optional(_bool),
    "side_aware": _bool,
    "C": _optional(float),
    "budget": _budget,
    "csv_path": _optional(str),
    "output": _optional(str),
}


def _parser_for(f):
    if f.name in _PARSERS:
        return _PARSERS[f.name]
    if isinstance(f.default, bool):
        return _bool
    if isinstance(f.default, int):
        return int
    if isinstance(f.default, float):
        return float
    return str


def read_config_text(text):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def config_from_mapping(mapping, base=None):
    """Build (or update ``base``) from string values keyed by field name."""
    known = {f.name: f for f in fields(ExperimentConfig)}
    unknown = set(mapping) - set(known)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    values = {k: _parser_for(known[k])(v) for k, v in mapping.items()}
    return replace(base or ExperimentConfig(), **values)


def load_config(path, overrides=None):
    mapping = read_config_text(Path(path).read_text(encoding="utf-8"))
    cfg = config_from_mapping(mapping)
    if cfg.csv_path and not Path(cfg.csv_path).is_absolute():
        candidate = Path(path).parent / cfg.csv_path
        if candidate.exists():
            cfg = replace(cfg, csv_path=str(candidate))
    if overrides:
        cfg = config_from_mapping(overrides, cfg)
    return cfg


def bundled_config(name):
    """Path of a config shipped with the package (``synthetic_imbalanced.cfg``, ...)."""
    path = CONFIG_DIR / name
    if not path.is_file():
        raise FileNotFoundError(f"no bundled config {name!r}")
    return path


@dataclass(frozen=True)
class RepeatRecord:
    index: int
    seed: int
    test_digest: str
    scores: Dict[str, Dict[str, float]]
    evaluated_on: Dict[str, str]
    feasible: Dict[str, bool] = field(default_factory=dict)
    details: Dict[str, Dict[str, float]] = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentReport:
    """Per-repeat scores plus summaries; std uses the population convention (ddof=0)."""

    methods: Tuple[str, ...]
    repeats: Tuple[RepeatRecord, ...]
    hyper: Dict[str, float] = field(default_factory=dict)

    def values(self, method, metric):
        return np.array([r.scores[method][metric] for r in self.repeats])

    def summary(self):
        return {
            m: {k: (float(self.values(m, k).mean()), float(self.values(m, k).std())) for k in METRICS}
            for m in self.methods
        }

    @property
    def failures(self):
        return {
            m: sum(1 for r in self.repeats if not r.feasible.get(m, True))
            for m in self.methods
            if m.startswith("ours")
        }


def _digest(d):
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(d.features).tobytes())
    h.update(np.ascontiguousarray(d.labels).tobytes())
    return h.hexdigest()[:16]


def _sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -z))


def _train_cfg(cfg, n, hyper, sample_weights=None, seed=0):
    C = hyper.get("C", cfg.C)
    reg = cfg.reg_strength if C is None else 1.0 / (C * n)
    return TrainConfig(cfg.learning_rate, cfg.epochs, reg, seed, sample_weights)


def _make_split(cfg, seed, data):
    if cfg.source == "synthetic":
        s_train, s_test = (int(x) for x in np.random.SeedSequence(seed).generate_state(2))
        train = gen_gaussian(SyntheticSpec(cfg.mu, int(cfg.train_neg), int(cfg.train_pos), s_train))
        test = gen_gaussian(SyntheticSpec(cfg.mu, cfg.test_neg, cfg.test_pos, s_test))
    else:
        tr, te = split_indices(data, SplitSpec(cfg.train_neg, cfg.train_pos, seed))
        train, test = data.subset(tr), data.subset(te)
    if cfg.scale_features:
        p = fit_scale(train)
        train, test = apply_scale(train, p), apply_scale(test, p)
    return train, test


def run_repeat(cfg, r, data=None, hyper=None):
    """Run every configured method on repeat ``r``; errors carry the repeat index."""
    try:
        return _run_repeat(cfg, r, data, hyper or {})
    except Exception as exc:
        raise type(exc)(f"repeat {r}: {exc}") from exc


def _run_repeat(cfg, r, data, hyper):
    seed = cfg.seed + r
    train, test = _make_split(cfg, seed, data)
    gamma = hyper.get("gamma", cfg.gamma)
    base_cfg = _train_cfg(cfg, len(train), hyper, seed=seed)
    base = train_model(cfg.model, train, base_cfg, gamma)
    s_train = base.score(train.features)
    s_test = base.score(test.features)
    base_pred = base.predict(test.features)
    costs = baselines.imbalance_costs(train.labels)

    scores, evaluated_on, feasible, details = {}, {}, {}, {}

    def record(method, pred):
        scores[method] = evaluate(test.labels, pred)
        evaluated_on[method] = _digest(test)

    for method in cfg.methods:
        if method == "baseline":
            record(method, base_pred)
        elif method == "smote":
            sm = baselines.smote(train, cfg.smote_k, seed)
            model = train_model(cfg.model, sm, _train_cfg(cfg, len(sm), hyper, seed=seed), gamma)
            record(method, model.predict(test.features))
        elif method == "bw":
            sw = balanced_sample_weights(train.labels)
            model = train_model(cfg.model, train, _train_cfg(cfg, len(train), hyper, sw, seed), gamma)
            record(method, model.predict(test.features))
        elif method == "thresh":
            thr = baselines.threshold_search(s_train, train.labels, costs)
            record(method, np.where(s_test >= thr, 1, -1))
            details[method] = {"threshold": thr}
        elif method == "bmr":
            if cfg.model == "logreg":
                prob = _sigmoid(s_test + base.b)
            else:
                prob = baselines.platt_fit(s_train, train.labels).predict_proba(s_test)
            record(method, baselines.bmr_decide(prob, costs))
        else:
            mode = method.split("-", 1)[1]
            slack = SlackConfig(mode, cfg.alpha, cfg.budget, cfg.allocation, cfg.side_aware)
            res = calibrate(Projection.from_scores(s_train, train.labels), slack)
            feasible[method] = res.feasible
            if res.feasible:
                record(method, res.predict(s_test))
                details[method] = {"threshold": res.threshold, "best_budget": res.best_budget}
            else:
                log.warning("repeat %d: %s infeasible, falling back to the baseline", r, method)
                record(method, base_pred)
    return RepeatRecord(r, seed, _digest(test), scores, evaluated_on, feasible, details)


def _tune(cfg, data):
    """Cross-validate (C, gamma) once on the first repeat's training split."""
    if not (cfg.cv_C or cfg.cv_gamma):
        return {}
    train, _ = _make_split(cfg, cfg.seed, data)
    Cs = cfg.cv_C or (cfg.C,)
    gammas = cfg.cv_gamma or (cfg.gamma,)
    points = list(itertools.product(Cs, gammas))
    grid = [(_train_cfg(cfg, len(train), {"C": C}, seed=cfg.seed), g) for C, g in points]
    best = grid_search_cv(train, grid, cfg.cv_folds, cfg.cv_metric, cfg.model, cfg.seed)
    C, g = points[next(i for i, pt in enumerate(grid) if pt is best)]
    hyper = {"gamma": g}
    if C is not None:
        hyper["C"] = C
    log.info("cross-validation picked %s", hyper)
    return hyper


def run_experiment(cfg):
    data = None
    if cfg.source == "csv":
        data = load_csv(cfg.csv_path, cfg.label_col, cfg.positive_label, cfg.drop_cols)
    hyper = _tune(cfg, data)
    idx = range(cfg.repeats)
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            records = list(pool.map(run_repeat, [cfg] * cfg.repeats, idx, [data] * cfg.repeats, [hyper] * cfg.repeats))
    else:
        records = [run_repeat(cfg, r, data, hyper) for r in idx]
    return ExperimentReport(tuple(cfg.methods), tuple(records), hyper)


def _cell(mean, std):
    return f"{mean:.3f} ± {std:.3f}"


def emit_table(report, fmt="markdown"):
    """Methods as rows, Accuracy / G-Mean / F1 as ``mean ± std`` columns."""
    if not report.repeats:
        raise ValueError("empty report")
    summ = report.summary()
    header = ["Methods"] + [METRIC_LABELS[k] for k in METRICS]
    rows = [[METHOD_LABELS[m]] + [_cell(*summ[m][k]) for k in METRICS] for m in report.methods]
    if fmt == "markdown":
        lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        lines += ["| " + " | ".join(r) + " |" for r in rows]
        return "\n".join(lines) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return buf.getvalue()
    raise ValueError(f"unknown table format {fmt!r}")


def parse_table_csv(text):
    """Inverse of ``emit_table(..., "csv")``: {row label: {metric label: (mean, std)}}."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    out = {}
    for row in reader:
        out[row[0]] = {
            h: tuple(float(x) for x in cell.split("±")) for h, cell in zip(header[1:], row[1:])
        }
    return out


def report_to_dict(report):
    """JSON-friendly view (per-repeat raw values included)."""
    return {
        "methods": list(report.methods),
        "hyper": dict(report.hyper),
        "summary": report.summary(),
        "failures": report.failures,
        "repeats": [asdict(r) for r in report.repeats],
    }
