"""Bias recalibration for binary threshold classifiers under class imbalance.

A trained classifier's scores are reduced to per-class means and supports in
the one-dimensional projected space. Concentration bounds inflate each
support, and the decision threshold is moved to where the two inflated
supports meet. The per-class confidence levels are chosen to minimise the
expected error, with outlying samples optionally excluded as slack.
"""
from .bounds import (
    confidence_factor,
    distance_interval,
    mean_deviation_bound,
    novel_point_threshold,
    ordering_probability_mc,
    support_upper_bound,
)
from .calibrate import (
    CalibrationResult,
    DeltaPair,
    DeltaSolution,
    SlackConfig,
    calibrate,
    delta2_from_delta1,
    loss,
    loss_gradient,
    optimize_deltas,
    threshold_from_delta,
)
from .dataset import Dataset, SplitSpec, SyntheticSpec, gen_gaussian, load_csv, stratified_split
from .metrics import accuracy, confusion, f1, g_mean
from .models import KernelModel, LinearModel, TrainConfig, train_model
from .projection import ClassStats, Projection, ProjectionStats, compute_stats, project

__version__ = "0.1.0"

__all__ = [
    "CalibrationResult",
    "ClassStats",
    "Dataset",
    "DeltaPair",
    "DeltaSolution",
    "KernelModel",
    "LinearModel",
    "Projection",
    "ProjectionStats",
    "SlackConfig",
    "SplitSpec",
    "SyntheticSpec",
    "TrainConfig",
    "accuracy",
    "calibrate",
    "compute_stats",
    "confidence_factor",
    "confusion",
    "delta2_from_delta1",
    "distance_interval",
    "f1",
    "g_mean",
    "gen_gaussian",
    "load_csv",
    "loss",
    "loss_gradient",
    "mean_deviation_bound",
    "novel_point_threshold",
    "optimize_deltas",
    "ordering_probability_mc",
    "project",
    "stratified_split",
    "support_upper_bound",
    "threshold_from_delta",
    "train_model",
]
