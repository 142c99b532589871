"""Concentration-inequality quantities for the projected-space class supports.

All functions accept scalars or numpy arrays. ``delta`` must lie in (0, 1];
callers that optimise over delta clamp it away from zero first.
"""
import numpy as np

from . import kernels


def _check(R, N, delta):
    R, N, delta = np.asarray(R, dtype=float), np.asarray(N, dtype=float), np.asarray(delta, dtype=float)
    if np.any(~(delta > 0)) or np.any(delta > 1):
        raise ValueError("delta must lie in (0, 1]")
    if np.any(N < 1):
        raise ValueError("N must be >= 1")
    if np.any(R < 0):
        raise ValueError("R must be non-negative")
    return R, N, delta


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def confidence_factor(delta):
    """2 + sqrt(2 ln(1/delta))."""
    return 2.0 + np.sqrt(-2.0 * np.log(delta))


def mean_deviation_bound(R, N, delta):
    """Radius within which the empirical mean sits from the true mean w.p. >= 1 - delta."""
    R, N, delta = _check(R, N, delta)
    return _out(R / np.sqrt(N) * confidence_factor(delta))


def distance_interval(d_bar, R, N, delta):
    """(lo, hi) bracket on a point's distance to the true mean.

    ``lo`` is not floored at zero.
    """
    if np.any(np.asarray(d_bar) < 0):
        raise ValueError("d_bar must be non-negative")
    dev = mean_deviation_bound(R, N, delta)
    return _out(np.asarray(d_bar) - dev), _out(np.asarray(d_bar) + dev)


def novel_point_threshold(d_bar_max, R, N, delta):
    """Distance a fresh point must exceed for an event of probability <= 1/(N+1)."""
    if np.any(np.asarray(d_bar_max) < 0):
        raise ValueError("d_bar_max must be non-negative")
    return _out(np.asarray(d_bar_max) + 2.0 * np.asarray(mean_deviation_bound(R, N, delta)))


def support_upper_bound(r_bar, N, delta):
    """Inflated class support: the empirical support plus its own mean-deviation bound.

    The empirical support ``r_bar`` stands in for the unknown true radius.
    """
    if np.any(np.asarray(r_bar) < 0):
        raise ValueError("r_bar must be non-negative")
    return _out(np.asarray(r_bar, dtype=float) + np.asarray(mean_deviation_bound(r_bar, N, delta)))


def ordering_probability_mc(N, trials, seed=0, dist="uniform"):
    """Fraction of trials in which the (N+1)-th i.i.d. draw exceeds the first N.

    ``dist`` is ``"uniform"`` or ``"normal"``; the answer should not depend on it.
    """
    if N < 1 or trials < 1:
        raise ValueError("N and trials must be >= 1")
    rng = np.random.default_rng(seed)
    if dist == "uniform":
        draws = rng.random((trials, N + 1))
    elif dist == "normal":
        draws = rng.standard_normal((trials, N + 1))
    else:
        raise ValueError(f"unknown distribution {dist!r}")
    return kernels.count_last_is_max(draws) / trials
