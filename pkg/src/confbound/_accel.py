"""Backend selection for the hot numeric kernels.

Numba is used when it imports and ``CONFBOUND_DISABLE_NUMBA`` is unset (or
falsy). Otherwise the vectorised numpy implementations in
``_kernels_numpy`` are dispatched instead.
"""
import os

_FALSY = ("", "0", "false", "no", "off")

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAS_NUMBA = False

DISABLED_BY_ENV = os.environ.get("CONFBOUND_DISABLE_NUMBA", "").strip().lower() not in _FALSY
USE_NUMBA = HAS_NUMBA and not DISABLED_BY_ENV


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise."""
    if HAS_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrapper(f):
        return f

    return wrapper


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
