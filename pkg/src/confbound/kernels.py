"""Dispatch point for the hot kernels (numba loops or numpy fallback)."""
from . import _kernels_numpy
from ._accel import USE_NUMBA, backend_name

if USE_NUMBA:
    from . import _kernels_numba as _impl
else:
    _impl = _kernels_numpy

greedy_exclusion_order = _impl.greedy_exclusion_order
prefix_stats = _impl.prefix_stats
optimize_many = _impl.optimize_many
pegasos_alphas = _impl.pegasos_alphas
count_last_is_max = _impl.count_last_is_max

BACKEND = backend_name()

__all__ = [
    "BACKEND",
    "count_last_is_max",
    "greedy_exclusion_order",
    "optimize_many",
    "pegasos_alphas",
    "prefix_stats",
]
