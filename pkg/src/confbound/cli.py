"""Command-line entry point: ``confbound {synth,train,calibrate,experiment,evaluate}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 infeasible calibration.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .calibrate import SlackConfig, calibrate, format_report, parse_report
from .dataset import SyntheticSpec, gen_gaussian, gen_medical_like, load_csv, save_csv
from .metrics import evaluate
from .models import TrainConfig, load_model, save_model, train_model
from .projection import project

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INFEASIBLE = 0, 1, 2, 3

log = logging.getLogger("confbound")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text):
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _budget(text):
    return text if text in ("all", "none") else int(text)


def _add_data_args(p):
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--label-col", default="label")
    p.add_argument("--positive-label", default="1")
    p.add_argument("--drop-cols", default="", help="comma-separated columns to ignore")


def _load(args):
    drop = tuple(c for c in args.drop_cols.split(",") if c)
    return load_csv(args.data, args.label_col, args.positive_label, drop)


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_synth(args):
    if args.kind == "gaussian":
        d = gen_gaussian(SyntheticSpec(args.mu, args.n_neg, args.n_pos, args.seed))
    else:
        d = gen_medical_like(args.n_neg, args.n_pos, args.n_features, args.seed)
    save_csv(d, args.out, args.label_col)
    log.info("wrote %d rows to %s", len(d), args.out)
    return EXIT_OK


def cmd_train(args):
    d = _load(args)
    reg = args.reg_strength if args.C is None else 1.0 / (args.C * len(d))
    cfg = TrainConfig(args.lr, args.epochs, reg, args.seed)
    save_model(train_model(args.model, d, cfg, args.gamma), args.out)
    return EXIT_OK


def _projection_csv(p, path):
    rows = ["index,score,label,excluded"]
    rows += [f"{i},{s!r},{int(y)},{int(e)}" for i, (s, y, e) in enumerate(zip(p.scores, p.labels, p.excluded))]
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def cmd_calibrate(args):
    model = load_model(args.model)
    d = _load(args)
    budget = None if args.budget == "none" else args.budget
    try:
        slack = SlackConfig(args.mode, args.alpha, budget, args.allocation, args.side_aware)
    except ValueError as exc:
        raise UsageError(str(exc))
    p = project(model, d)
    res = calibrate(p, slack)
    report = format_report(res)
    _write(report, args.out)
    if args.curve_csv:
        Path(args.curve_csv).write_text(report.split("[curve]\n", 1)[1], encoding="utf-8")
    if args.projection_csv:
        _projection_csv(p.with_excluded(res.excluded), args.projection_csv)
    if not res.feasible:
        print(res.advisory, file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _overrides(args):
    out = {}
    for item in args.set or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        out[key.strip()] = value.strip()
    for key in ("repeats", "seed", "jobs", "methods", "output", "format"):
        value = getattr(args, key)
        if value is not None:
            out[key] = str(value)
    return out


def cmd_experiment(args):
    path = Path(args.config)
    if not path.exists():
        try:
            path = harness.bundled_config(args.config)
        except FileNotFoundError:
            raise UsageError(f"config file {args.config!r} not found")
    try:
        cfg = harness.load_config(path, _overrides(args))
    except ValueError as exc:
        raise UsageError(str(exc))
    report = harness.run_experiment(cfg)
    _write(harness.emit_table(report, cfg.format), cfg.output)
    if args.json:
        Path(args.json).write_text(json.dumps(harness.report_to_dict(report), indent=2), encoding="utf-8")
    for method, n in report.failures.items():
        if n:
            log.warning("%s was infeasible on %d of %d repeats", method, n, cfg.repeats)
    return EXIT_OK


def cmd_evaluate(args):
    model = load_model(args.model)
    d = _load(args)
    if args.report:
        rep = parse_report(Path(args.report).read_text(encoding="utf-8"))
        if not rep.get("feasible", False):
            raise ValueError("report describes an infeasible calibration")
        threshold, orientation = rep["threshold"], rep["orientation"]
    else:
        threshold, orientation = args.threshold, args.orientation
    if threshold is None:
        pred = model.predict(d.features)
    else:
        pred = np.where(orientation * model.score(d.features) >= threshold, 1, -1)
    scores = evaluate(d.labels, pred)
    _write("".join(f"{k} = {v!r}\n" for k, v in scores.items()), args.out)
    return EXIT_OK


def build_parser():
    ap = _Parser(prog="confbound", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic dataset CSV")
    p.add_argument("--kind", choices=("gaussian", "medical"), default="gaussian")
    p.add_argument("--mu", type=_floats, default=(1.0, 1.0))
    p.add_argument("--n-neg", type=int, default=1000)
    p.add_argument("--n-pos", type=int, default=10)
    p.add_argument("--n-features", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--label-col", default="label")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="fit a model and serialise it")
    _add_data_args(p)
    p.add_argument("--model", choices=("logreg", "linear_svm", "rbf_svm"), default="logreg")
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--reg-strength", type=float, default=1e-4)
    p.add_argument("--C", type=float, default=None, help="inverse regularisation; overrides --reg-strength")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("calibrate", help="recalibrate a saved model's bias on a CSV")
    p.add_argument("--model", required=True)
    _add_data_args(p)
    p.add_argument("--mode", choices=("binary", "continuous"), default="binary")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--budget", type=_budget, default="none", help="integer, 'all' or 'none' (capped default)")
    p.add_argument("--allocation", choices=("proportional", "equal"), default="proportional")
    p.add_argument("--side-aware", action="store_true")
    p.add_argument("--out", default="-")
    p.add_argument("--curve-csv")
    p.add_argument("--projection-csv")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("experiment", help="run the repeated comparison from a config file")
    p.add_argument("--config", required=True, help="path or bundled config name")
    p.add_argument("--repeats", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--methods")
    p.add_argument("--output")
    p.add_argument("--format", choices=("markdown", "csv"))
    p.add_argument("--json", help="also dump per-repeat results as JSON")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("evaluate", help="metrics of a model (optionally re-thresholded) on a CSV")
    p.add_argument("--model", required=True)
    _add_data_args(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--report", help="calibration report produced by 'calibrate'")
    g.add_argument("--threshold", type=float)
    p.add_argument("--orientation", type=int, choices=(-1, 1), default=1)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_evaluate)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"confbound: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"confbound: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
